#include "cowrite/coding.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "cowrite/csv.hpp"
#include "cowrite/sentences.hpp"

namespace cowrite::coding {

using ingest::EventName;
using ingest::EventSource;

namespace {

constexpr std::array<std::string_view, kCodeCount> kCodeNames = {
    "compose",   "relocate",  "reflect",      "seekSugg",   "dismissSugg",     "acceptSugg",      "hoverSugg",
    "cursorFwd", "cursorBwd", "cursorSelect", "reviseUser", "reviseSugg", "lowModification", "highModification"};

std::size_t final_length(const ingest::Session& session) {
  SentenceTracker tracker(session);
  while (!tracker.finished()) tracker.advance();
  return tracker.glyphs().size();
}

}  // namespace

std::string_view to_string(Code code) { return kCodeNames[static_cast<std::size_t>(code)]; }

std::optional<Code> parse_code(std::string_view name) {
  for (std::size_t i = 0; i < kCodeCount; ++i) {
    if (kCodeNames[i] == name) return static_cast<Code>(i);
  }
  return std::nullopt;
}

CodingResult code_events(const ingest::Session& session, SimilarityProvider& similarity) {
  const double reflect_from = kReflectShare * static_cast<double>(final_length(session));
  CodingResult out;
  std::map<std::size_t, std::size_t> next_line;  // per sentence index

  SentenceTracker tracker(session);
  while (!tracker.finished()) {
    const Step& step = tracker.advance();
    const auto& ev = session.events[step.event_index];
    CodeSet c;
    switch (ev.name) {
      case EventName::SuggestionGet:
        c.set(bit(Code::SeekSugg));
        break;
      case EventName::SuggestionClose:
        if (ev.source == EventSource::User) c.set(bit(Code::DismissSugg));
        break;
      case EventName::SuggestionAccept:
        c.set(bit(Code::AcceptSugg));
        break;
      case EventName::SuggestionHover:
        c.set(bit(Code::HoverSugg));
        break;
      case EventName::CursorForward:
        c.set(bit(Code::CursorFwd));
        break;
      case EventName::CursorBackward:
        c.set(bit(Code::CursorBwd));
        break;
      case EventName::CursorSelect:
        c.set(bit(Code::CursorSelect));
        break;
      default:
        break;
    }
    if (ev.name == EventName::TextInsert && step.at_end) c.set(bit(Code::Compose));
    if (!step.relocated.empty()) c.set(bit(Code::Relocate));

    if (step.in_text && ev.source == EventSource::User) {
      if (static_cast<double>(step.length_before) >= reflect_from) c.set(bit(Code::Reflect));
      std::optional<double> lowest;
      for (const auto& r : step.revised) {
        if (r.ownership == Owner::User) {
          c.set(bit(Code::ReviseUser));
          continue;
        }
        c.set(bit(Code::ReviseSugg));
        if (!r.anchor) continue;
        const double s = r.after && !r.after->empty() ? similarity.similarity(*r.after, *r.anchor) : 0.0;
        lowest = lowest ? std::min(*lowest, s) : s;
      }
      if (lowest) {
        if (*lowest > kModificationThreshold) {
          c.set(bit(Code::LowModification));
        } else if (*lowest < kModificationThreshold) {
          c.set(bit(Code::HighModification));
        } else {
          ++out.at_threshold;
        }
      }
    }

    if (c.none()) {
      ++out.dropped;
      continue;
    }
    CodedLine line;
    line.session_id = session.session_id;
    line.sentence_index = step.sentence_index;
    line.line_index = next_line[step.sentence_index]++;
    line.event_index = step.event_index;
    line.codes = c;
    out.lines.push_back(std::move(line));
  }
  return out;
}

std::string coded_lines_csv(const std::vector<CodedLine>& lines) {
  std::ostringstream out;
  std::vector<std::string> header{"sessionId", "sentenceIndex", "lineIndex"};
  for (auto n : kCodeNames) header.emplace_back(n);
  out << csv::join(header) << '\n';
  for (const auto& l : lines) {
    std::vector<std::string> row{l.session_id, std::to_string(l.sentence_index), std::to_string(l.line_index)};
    for (std::size_t i = 0; i < kCodeCount; ++i) row.emplace_back(l.codes.test(i) ? "1" : "0");
    out << csv::join(row) << '\n';
  }
  return out.str();
}

}  // namespace cowrite::coding
