// Copyright 2026 The Confra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "confra/text.h"

namespace confra {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar starting at text[*pos] and advances *pos.
char32_t DecodeOne(std::string_view text, std::size_t* pos) {
  const auto b0 = static_cast<unsigned char>(text[*pos]);
  int len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++*pos;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++*pos;
    return kReplacement;
  }
  if (*pos + len > text.size()) {
    ++*pos;
    return kReplacement;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(text[*pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++*pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  *pos += len;
  return cp;
}

}  // namespace

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) out.push_back(DecodeOne(text, &pos));
  return out;
}

std::string EncodeUtf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::size_t CodepointLength(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    DecodeOne(text, &pos);
    ++n;
  }
  return n;
}

std::string Utf8Substr(std::string_view text, std::size_t start,
                       std::size_t end) {
  std::size_t pos = 0;
  std::size_t index = 0;
  std::size_t byte_start = text.size();
  std::size_t byte_end = text.size();
  while (pos < text.size()) {
    if (index == start) byte_start = pos;
    if (index == end) {
      byte_end = pos;
      break;
    }
    DecodeOne(text, &pos);
    ++index;
  }
  if (start >= end || byte_start >= byte_end) return {};
  return std::string(text.substr(byte_start, byte_end - byte_start));
}

char32_t AsciiLower(char32_t c) {
  return (c >= 'A' && c <= 'Z') ? c + ('a' - 'A') : c;
}

std::string AsciiLower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + ('a' - 'A'));
  }
  return out;
}

bool IsSpace(char32_t c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool IsWordChar(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           (c >= 'A' && c <= 'Z') || c == '_';
  }
  if (IsSpace(c)) return false;
  // Latin-1 punctuation and symbols, except the ordinal/micro letters.
  if (c <= 0xBF) return c == 0xAA || c == 0xB5 || c == 0xBA;
  if (c == 0xD7 || c == 0xF7) return false;
  // General punctuation, super/subscripts, currency, letterlike forms,
  // arrows, math, technical, box drawing, dingbats and misc symbols.
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;  // CJK punctuation
  if (c >= 0xFE00 && c <= 0xFE0F) return false;  // variation selectors
  if (c >= 0xFE30 && c <= 0xFE6F) return false;
  if (c >= 0xFF00 && c <= 0xFF0F) return false;
  if (c >= 0x1F000 && c <= 0x1FAFF) return false;  // emoji and pictographs
  if (c >= 0xE0000) return false;                  // tags
  return true;
}

std::vector<Token> Tokenize(std::string_view text) {
  const std::u32string cps = DecodeUtf8(text);
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    const char32_t c = cps[i];
    if (IsSpace(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.start = i;
    if (IsWordChar(c)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (IsWordChar(cps[j])) {
          ++j;
          continue;
        }
        const bool joiner =
            cps[j] == '\'' || cps[j] == 0x2019 || cps[j] == '.';
        if (joiner && j + 1 < n && IsWordChar(cps[j + 1])) {
          j += 2;
          continue;
        }
        break;
      }
      tok.end = j;
      tok.is_word = true;
    } else {
      tok.end = i + 1;
    }
    tok.text = EncodeUtf8(std::u32string_view(cps).substr(tok.start,
                                                          tok.end - tok.start));
    tokens.push_back(std::move(tok));
    i = tokens.back().end;
  }
  return tokens;
}

}  // namespace confra
