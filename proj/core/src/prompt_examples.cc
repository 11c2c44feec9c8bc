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

#include "confra/prompting.h"

namespace confra {

const std::vector<FewShotExample>& CanonicalExamples() {
  static const std::vector<FewShotExample>* const kExamples =
      new std::vector<FewShotExample>{
          {
              "Example 1 (Conspiratorial — plan_event + out_group + in_group)",
              R"ex(Influence Operation Relied on Influencers, AI-Generated Content, Paid Social Media Advertisements, and Social Media Accounts to Drive Internet Traffic to Cybersquatted and Other Domains

The Justice Department today announced the ongoing seizure of 32 internet domains used in Russian government-directed foreign malign influence campaigns colloquially referred to as "Doppelganger," in violation of U.S. money laundering and criminal trademark laws. As alleged in an unsealed affidavit, the Russian companies Social Design Agency (SDA), Structura National Technology (Structura), and ANO Dialog, operating under the direction and control of the Russian Presidential Administration, and in particular First Deputy Chief of Staff of the Presidential Executive Office Sergei Vladilenovich Kiriyenko, used these domains, among others, to covertly spread Russian government propaganda with the aim of reducing international support for Ukraine, bolstering pro-Russian policies and interests, and influencing voters in U.S. and foreign elections, including the U.S. 2024 Presidential Election.)ex",
              R"ex({
  "is_conspiratorial": true,
  "rationale_short": "Claims Russian-backed influence operations drive traffic to propaganda domains to sway elections.",
  "confidence": 0.83,
  "spans": [
    { "label": "plan_event", "text": "Drive Internet Traffic to Cybersquatted and Other Domains" },
    { "label": "out_group", "text": "Russian government" },
    { "label": "in_group", "text": "U.S." }
  ]
})ex",
              {
                  {SpanLabel::kPlanEvent, {"Self_motion", "Subjective_influence", "Bringing", "Cause_motion", "Operate_vehicle"}},
              },
          },
          {
              "Example 2 (Conspiratorial — multiple plan_events + secret + out_group)",
              R"ex(Jewish German Government -

"You can be thankful we let the third world in making your cities more unsafe... you can be thankful we turn your children gay and punish you for speaking out against immigration and the holohoax.  Now we will light up the Brandenburg Gate with the satanic star of Remphan to show you who rules over you.  Please be stupid and buy into our tears for help one more time."

People everywhere will start learning what these savages do to the Palestinians. Support for Israel will only decline until they seem to be the last ones cheering themselves on.)ex",
              R"ex({
  "is_conspiratorial": true,
  "rationale_short": "Alleges a Jewish-led government secretly harms citizens and stages propaganda to control them.",
  "confidence": 0.80,
  "spans": [
    { "label": "plan_event", "text": "punish you for speaking out against immigration and the holohoax" },
    { "label": "plan_event", "text": "light up the Brandenburg Gate with the satanic star of Remphan" },
    { "label": "secret", "text": "buy into" },
    { "label": "out_group", "text": "Jewish German Government" },
    { "label": "out_group", "text": "savages" }
  ]
})ex",
              {
                  {SpanLabel::kPlanEvent, {"Rewards_and_punishments", "Statement", "Chatting", "Color_qualities", "Setting_fire"}},
                  {SpanLabel::kSecret, {"Commerce_buy"}},
              },
          },
          {
              "Example 3 (Conspiratorial — plan_event + secret, policy focus)",
              R"ex(  "Courts will sit for 24 hours to fast-track sentencing under government plans to crack down on far-Right riots that swept Britain on Saturday"

 : Funny they can't do the same with illegals.)ex",
              R"ex({
  "is_conspiratorial": true,
  "rationale_short": "Claims the government secretly targets far-right activists while protecting illegal immigrants.",
  "confidence": 0.72,
  "spans": [
    { "label": "plan_event", "text": "government plans to crack down on far-Right riots" },
    { "label": "plan_event", "text": "can't do the same with illegals" },
    { "label": "secret", "text": "they can't do the same with illegals" },
    { "label": "in_group", "text": "far-Right riots" }
  ]
})ex",
              {
                  {SpanLabel::kPlanEvent, {"Leadership", "Organization", "Project", "Purpose", "Making_arrangements"}},
                  {SpanLabel::kSecret, {"Intentionally_act", "Legality", "Identicality", "Thriving", "Intentionally_affect"}},
              },
          },
          {
              "Example 4 (Conspiratorial — plan_event + in_group + call_to_action)",
              R"ex(Texans are known for their resilience and ability to persevere in the face of adversity. From enduring harsh weather conditions like hurricanes and droughts to facing racial demographic challenges, Texans have shown time and time again that they are a tough and resilient people. Their strong sense of community and willingness to help one another in times of need is a testament to their unwavering spirit. Despite facing numerous obstacles, Texans always find a way to come together, support each other, and rebuild stronger than before, as evidenced by the reformation of WLM Texas. This resilience is ingrained in the Texan spirit and serves as a source of inspiration for others facing similar challenges. 
If you're a White man or woman in the state of Texas, reach out. The community and system of support you've been looking for is right here.)ex",
              R"ex({
  "is_conspiratorial": true,
  "rationale_short": "Portrays racial demographic change as an intentional threat and urges Whites to organize.",
  "confidence": 0.69,
  "spans": [
    { "label": "plan_event", "text": "racial demographic challenges" },
    { "label": "in_group", "text": "White man or woman" },
    { "label": "call_to_action", "text": "always find a way to come together, support each other, and rebuild stronger than before" }
  ]
})ex",
              {
                  {SpanLabel::kPlanEvent, {"Statement", "Competition", "Difficulty"}},
              },
          },
          {
              "Example 5 (Not conspiratorial — neutral coordination request)",
              R"ex(Hey guys, we're trying to get this community noted. 

Can everyone please tag   in the comments and correct us.)ex",
              R"ex({
  "is_conspiratorial": false,
  "rationale_short": "Asks followers to tag accounts; no secret plan or coordinated harm is described.",
  "confidence": 0.24,
  "spans": []
})ex",
              {},
          },
          {
              "Example 6 (Not conspiratorial — supportive tone only)",
              R"ex(Someone should comment this under Elon Musks Comment he made about Haiti.

In fact... most of you should clip parts of this and paste this link below so everyone can watch it all over twitter. Everyone is wondering why they eat people... maybe this will enlighten them a bit. Scientific brain IQ and brain measurements are also useful to post.)ex",
              R"ex({
  "is_conspiratorial": false,
  "rationale_short": "Encourages sharing a link but does not describe a secret coordinated plan causing harm.",
  "confidence": 0.31,
  "spans": []
})ex",
              {},
          },
      };
  return *kExamples;
}

}  // namespace confra
