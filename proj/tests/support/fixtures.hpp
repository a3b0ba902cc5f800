#pragma once

#include <array>
#include <string>
#include <vector>

#include "cowrite/features.hpp"
#include "log_builder.hpp"

namespace testing_support {

// Scripted eleven-minute session. Every minute's events sit inside its 60 s
// window; the expected features were counted by hand from the script.
inline std::string eleven_minute_log() {
  LogBuilder b("fixture11");
  b.init(0.0);
  // Minute 0: 12 typed characters.
  b.append(5.0, "Hello world.");
  // Minute 1: 3 requests, 2 acceptances (18 api chars), 1 dismissal, 4 typed chars.
  b.event(61.0, "suggestion-get").event(61.5, "suggestion-open", "api");
  b.accept(62.0, " Api one.");
  b.event(63.0, "suggestion-get").event(63.5, "suggestion-open", "api");
  b.accept(64.0, " Api two.");
  b.event(65.0, "suggestion-get").event(65.5, "suggestion-open", "api");
  b.event(66.0, "suggestion-close", "user");
  b.append(70.0, " Me.");
  // Minute 2: idle.
  // Minute 3: 1 request, accepted (7 api chars), then 2 of them deleted.
  b.event(181.0, "suggestion-get").event(181.5, "suggestion-open", "api");
  b.accept(182.0, " Three.");
  b.erase(190.0, b.find("Three.") + 2, 2);  // "Three." -> "The."
  // Minute 4: a one-character edit inside the second acceptance.
  b.insert(250.0, b.find("Api two.") + 3, "x");
  // Minute 5: 2 requests, both dismissed, 6 typed chars.
  b.event(301.0, "suggestion-get").event(302.0, "suggestion-close", "user");
  b.event(303.0, "suggestion-get").event(304.0, "suggestion-close", "user");
  b.append(310.0, " Done.");
  // Minute 6: a request at the very end of the window...
  b.event(419.5, "suggestion-get").event(419.7, "suggestion-open", "api");
  // Minute 7: ...accepted in the next one (7 api chars).
  b.accept(421.0, " Seven.");
  // Minute 8: cursor moves only.
  b.event(490.0, "cursor-backward").event(491.0, "cursor-forward");
  // Minute 9: 2 requests, 2 acceptances (16 api chars); the second sentence is deleted.
  b.event(541.0, "suggestion-get");
  b.accept(542.0, " Nine a.");
  b.event(543.0, "suggestion-get");
  b.accept(544.0, " Nine b.");
  b.erase(550.0, b.find("Nine b."), 7);
  // Minute 10: 5 typed chars, last event at 630 s.
  b.append(630.0, " End.");
  return b.str();
}

// calls, acceptRate, modifyRate, aiCharRate per window.
inline std::vector<cowrite::features::FeatureVector> eleven_minute_expected() {
  return {
      {0, 0, 0, 0},                         // 0
      {3, 2.0 / 3.0, 1.0 / 2.0, 18.0 / 22.0},  // 1: second acceptance edited in minute 4
      {0, 0, 0, 0},                         // 2
      {1, 1, 1, 5.0 / 7.0},                 // 3
      {0, 0, 0, 0},                         // 4: 1 typed char, no api text
      {2, 0, 0, 0},                         // 5
      {1, 0, 0, 0},                         // 6
      {0, 0, 0, 1},                         // 7: acceptance without a request in the window
      {0, 0, 0, 0},                         // 8
      {2, 1, 1.0 / 2.0, 9.0 / 16.0},        // 9: " Nine a." and the space before "Nine b." survive
      {0, 0, 0, 0},                         // 10
  };
}

}  // namespace testing_support
