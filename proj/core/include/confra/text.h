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

// UTF-8 helpers and the word tokenizer shared by span metrics, agreement
// and frame mapping. All offsets are Unicode scalar-value indices.

#ifndef CONFRA_TEXT_H_
#define CONFRA_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace confra {

// Decodes UTF-8 into scalar values. Invalid bytes decode to U+FFFD, one per
// byte, so every input has a well-defined length.
std::u32string DecodeUtf8(std::string_view text);
std::string EncodeUtf8(std::u32string_view text);

// Number of scalar values in `text`.
std::size_t CodepointLength(std::string_view text);

// Substring by scalar-value offsets [start, end). Out-of-range offsets clamp.
std::string Utf8Substr(std::string_view text, std::size_t start,
                       std::size_t end);

// ASCII-only case folding; non-ASCII scalars pass through unchanged so that
// offsets are preserved.
std::string AsciiLower(std::string_view text);
char32_t AsciiLower(char32_t c);

bool IsSpace(char32_t c);
bool IsWordChar(char32_t c);

struct Token {
  std::size_t start = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive
  std::string text;
  bool is_word = false;   // false for punctuation, symbols and emoji
};

// Word-boundary tokenization: runs of letters/digits form words, an
// apostrophe or period between two word characters stays inside the word
// ("can't", "3.5"), and every other non-space scalar is its own token.
std::vector<Token> Tokenize(std::string_view text);

}  // namespace confra

#endif  // CONFRA_TEXT_H_
