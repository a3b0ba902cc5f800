#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cowrite::ingest {

// The closed set of event types. Two raw dataset names are folded into it:
// "suggestion-select" is read as SuggestionAccept and "suggestion-reopen" as
// SuggestionOpen; the raw name survives in Event::attributes["rawEventName"].
enum class EventName {
  SystemInitialize,
  TextInsert,
  TextDelete,
  CursorForward,
  CursorBackward,
  CursorSelect,
  SuggestionGet,
  SuggestionOpen,
  SuggestionUp,
  SuggestionDown,
  SuggestionHover,
  SuggestionAccept,
  SuggestionClose,
};

inline constexpr std::size_t kEventNameCount = 13;

std::string_view to_string(EventName name);
std::optional<EventName> parse_event_name(std::string_view raw);

enum class EventSource { User, Api };
std::string_view to_string(EventSource source);

enum class Genre { Creative, Argumentative, Unknown };
std::string_view to_string(Genre genre);

// Offsets are UTF-16 code units into the document before the event.
// For text-insert, [start, end) is the replaced range (empty for a plain
// insert) and textDelta is the new text. For text-delete, [start, end) is the
// removed range and textDelta the removed text. For cursor events it is the
// selection.
struct CursorRange {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const CursorRange&) const = default;
};

struct Event {
  std::string session_id;
  std::size_t event_index = 0;
  EventName name = EventName::SystemInitialize;
  EventSource source = EventSource::User;
  std::int64_t timestamp_ms = 0;
  std::optional<std::string> text_delta;
  std::optional<CursorRange> cursor_range;
  // Full document after this event, when the log carries one.
  std::optional<std::string> current_doc;
  // Raw fields without typed semantics, as compact JSON text.
  std::map<std::string, std::string> attributes;

  bool operator==(const Event&) const = default;
};

struct Session {
  std::string session_id;
  std::vector<Event> events;
  Genre genre = Genre::Unknown;
  std::string final_doc;

  bool operator==(const Session&) const = default;
};

struct SurveyResponse {
  std::string session_id;
  std::map<std::string, int> answers;  // "Q1".."Q9" -> 1..7
};

enum class LogFormat { CoauthorJsonl, NormalizedCsv };

// Parses one session. For jsonl the session id is taken from `session_id`
// (callers pass the file stem); for csv it comes from the sessionId column
// and `session_id` is only a fallback for an empty column.
Session parse_session_log(std::istream& raw, LogFormat format, std::string_view session_id = {});
Session parse_session_log(std::string_view raw, LogFormat format, std::string_view session_id = {});

std::vector<SurveyResponse> load_survey(std::istream& raw);
std::vector<SurveyResponse> load_survey(std::string_view raw);

// Two-column CSV (sessionId, genre). Unrecognised genres map to Unknown.
std::map<std::string, Genre> load_genre_index(std::string_view raw);

inline constexpr std::array<std::string_view, 10> kNormalizedColumns = {
    "sessionId", "eventIndex", "eventName",  "eventSource", "timestampMs",
    "textDelta", "cursorStart", "cursorEnd", "currentDoc",  "attributes"};

// The first eight columns are the interchange contract; currentDoc and
// attributes are optional on read and make the round trip lossless.
std::string to_normalized_csv(const Session& session);

// Plain-text replay of the session's edits, used for finalDoc. Ranges past
// the end of the document are clamped.
std::string replay_final_document(const std::vector<Event>& events);

}  // namespace cowrite::ingest
