#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cowrite/ingest.hpp"
#include "cowrite/similarity.hpp"

namespace cowrite::coding {

enum class Code {
  Compose,
  Relocate,
  Reflect,
  SeekSugg,
  DismissSugg,
  AcceptSugg,
  HoverSugg,
  CursorFwd,
  CursorBwd,
  CursorSelect,
  ReviseUser,
  ReviseSugg,
  LowModification,
  HighModification,
};

inline constexpr std::size_t kCodeCount = 14;
using CodeSet = std::bitset<kCodeCount>;

std::string_view to_string(Code code);
std::optional<Code> parse_code(std::string_view name);
inline std::size_t bit(Code c) { return static_cast<std::size_t>(c); }

// Similarity strictly above this is a low modification, strictly below a high one.
inline constexpr double kModificationThreshold = 0.8;
// Revisions count as reflection once the document holds this share of its
// final character count.
inline constexpr double kReflectShare = 0.9;

struct CodedLine {
  std::string session_id;
  std::size_t sentence_index = 0;  // conversation is (session_id, sentence_index)
  std::size_t line_index = 0;      // ordinal within the conversation
  std::size_t event_index = 0;
  CodeSet codes;
};

struct CodingResult {
  std::vector<CodedLine> lines;
  std::size_t dropped = 0;         // events without any code
  std::size_t at_threshold = 0;    // lines whose similarity was exactly the threshold
};

CodingResult code_events(const ingest::Session& session, SimilarityProvider& similarity);

// sessionId, sentenceIndex, lineIndex, then one 0/1 column per code.
std::string coded_lines_csv(const std::vector<CodedLine>& lines);

}  // namespace cowrite::coding
