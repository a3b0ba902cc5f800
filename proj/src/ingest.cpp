#include "cowrite/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cowrite/csv.hpp"
#include "cowrite/error.hpp"
#include "cowrite/utf.hpp"

namespace cowrite::ingest {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kEventNameCount> kEventNames = {
    "system-initialize", "text-insert",     "text-delete",     "cursor-forward",
    "cursor-backward",   "cursor-select",   "suggestion-get",  "suggestion-open",
    "suggestion-up",     "suggestion-down", "suggestion-hover", "suggestion-accept",
    "suggestion-close"};

struct QuillOp {
  enum Kind { Retain, Insert, Delete } kind;
  std::size_t count = 0;
  std::u16string text;
};

// An event as read from the file, before ordering and delta resolution.
struct RawRecord {
  Event event;
  std::vector<QuillOp> ops;
  bool has_ops = false;
  std::size_t line_no = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

EventSource parse_source(std::string_view s, std::size_t line_no) {
  if (s == "user") return EventSource::User;
  if (s == "api") return EventSource::Api;
  throw MalformedRecord(line_no, "eventSource must be 'user' or 'api', got '" + std::string(s) + "'");
}

EventName require_event_name(std::string_view raw) {
  auto name = parse_event_name(raw);
  if (!name) throw UnknownEventName(std::string(raw));
  return *name;
}

std::vector<QuillOp> parse_quill_ops(const json& delta, std::size_t line_no) {
  const json* ops = &delta;
  if (delta.is_object()) {
    auto it = delta.find("ops");
    if (it == delta.end()) throw MalformedRecord(line_no, "textDelta object without ops");
    ops = &*it;
  }
  if (!ops->is_array()) throw MalformedRecord(line_no, "textDelta ops is not an array");
  std::vector<QuillOp> out;
  for (const auto& op : *ops) {
    if (!op.is_object()) throw MalformedRecord(line_no, "textDelta op is not an object");
    if (auto r = op.find("retain"); r != op.end() && r->is_number_unsigned()) {
      out.push_back({QuillOp::Retain, r->get<std::size_t>(), {}});
    } else if (auto d = op.find("delete"); d != op.end() && d->is_number_unsigned()) {
      out.push_back({QuillOp::Delete, d->get<std::size_t>(), {}});
    } else if (auto ins = op.find("insert"); ins != op.end()) {
      // Embeds (non-string inserts) occupy one position in the editor.
      std::u16string text = ins->is_string() ? to_utf16(ins->get<std::string>()) : u"￼";
      out.push_back({QuillOp::Insert, text.size(), std::move(text)});
    } else {
      throw MalformedRecord(line_no, "unrecognised textDelta op");
    }
  }
  return out;
}

struct ResolvedEdit {
  CursorRange range;
  std::u16string inserted;
  std::u16string after;
};

// Applies ops to `before` (clamping overruns) and expresses the change as a
// single replaced range. Deltas touching several separated regions collapse
// to the smallest range covering all of them.
ResolvedEdit resolve_ops(const std::u16string& before, const std::vector<QuillOp>& ops) {
  ResolvedEdit out;
  std::size_t pos = 0;
  std::optional<std::size_t> region_start;
  std::size_t region_end = 0;
  bool multi_region = false;
  bool retained_after_change = false;
  for (const auto& op : ops) {
    switch (op.kind) {
      case QuillOp::Retain: {
        const std::size_t n = std::min(op.count, before.size() - std::min(pos, before.size()));
        out.after.append(before, std::min(pos, before.size()), n);
        pos += op.count;
        if (region_start && op.count > 0) retained_after_change = true;
        break;
      }
      case QuillOp::Delete:
        if (retained_after_change) multi_region = true;
        if (!region_start) region_start = pos;
        pos += op.count;
        region_end = pos;
        out.inserted.clear();
        break;
      case QuillOp::Insert:
        if (retained_after_change) multi_region = true;
        if (!region_start) {
          region_start = pos;
          region_end = pos;
        }
        out.after += op.text;
        out.inserted += op.text;
        break;
    }
  }
  if (pos < before.size()) out.after.append(before, pos);

  if (!region_start) {
    out.range = {std::min(pos, before.size()), std::min(pos, before.size())};
    return out;
  }
  if (!multi_region) {
    // Rebuild inserted text in op order (deletes may interleave with inserts).
    out.inserted.clear();
    for (const auto& op : ops) {
      if (op.kind == QuillOp::Insert) out.inserted += op.text;
    }
    out.range = {std::min(*region_start, before.size()), std::min(region_end, before.size())};
    return out;
  }
  std::size_t prefix = 0;
  while (prefix < before.size() && prefix < out.after.size() && before[prefix] == out.after[prefix])
    ++prefix;
  std::size_t suffix = 0;
  while (suffix < before.size() - prefix && suffix < out.after.size() - prefix &&
         before[before.size() - 1 - suffix] == out.after[out.after.size() - 1 - suffix])
    ++suffix;
  out.range = {prefix, before.size() - suffix};
  out.inserted = out.after.substr(prefix, out.after.size() - suffix - prefix);
  return out;
}

void apply_edit(std::u16string& doc, const Event& ev) {
  if (!ev.cursor_range) return;
  const std::size_t s = std::min(ev.cursor_range->start, doc.size());
  const std::size_t e = std::clamp(ev.cursor_range->end, s, doc.size());
  if (ev.name == EventName::TextInsert) {
    doc.replace(s, e - s, ev.text_delta ? to_utf16(*ev.text_delta) : std::u16string{});
  } else if (ev.name == EventName::TextDelete) {
    doc.erase(s, e - s);
  }
}

RawRecord parse_jsonl_line(std::string_view line, std::size_t line_no, const std::string& session_id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw MalformedRecord(line_no, e.what());
  }
  if (!j.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");

  RawRecord rec;
  rec.line_no = line_no;
  Event& ev = rec.event;
  ev.session_id = session_id;

  auto name = j.find("eventName");
  if (name == j.end() || !name->is_string()) throw MalformedRecord(line_no, "missing eventName");
  const std::string raw_name = name->get<std::string>();
  ev.name = require_event_name(raw_name);
  if (raw_name != to_string(ev.name)) ev.attributes["rawEventName"] = json(raw_name).dump();

  auto source = j.find("eventSource");
  if (source == j.end() || !source->is_string()) throw MalformedRecord(line_no, "missing eventSource");
  ev.source = parse_source(source->get<std::string>(), line_no);

  auto ts = j.find("eventTimestamp");
  if (ts == j.end()) ts = j.find("timestampMs");
  if (ts == j.end() || !ts->is_number()) throw MalformedRecord(line_no, "missing eventTimestamp");
  ev.timestamp_ms = static_cast<std::int64_t>(std::llround(ts->get<double>()));

  if (auto delta = j.find("textDelta"); delta != j.end()) {
    if (delta->is_object() || delta->is_array()) {
      rec.ops = parse_quill_ops(*delta, line_no);
      rec.has_ops = true;
    } else if (delta->is_string() && !delta->get_ref<const std::string&>().empty()) {
      const auto& s = delta->get_ref<const std::string&>();
      try {
        rec.ops = parse_quill_ops(json::parse(s), line_no);
        rec.has_ops = true;
      } catch (const json::parse_error&) {
        throw MalformedRecord(line_no, "textDelta is neither a delta object nor empty");
      }
    }
  }

  if (auto cr = j.find("cursorRange"); cr != j.end() && cr->is_object()) {
    const auto index = cr->value("index", std::size_t{0});
    const auto length = cr->value("length", std::size_t{0});
    CursorRange range{index, index + length};
    if (rec.has_ops) {
      ev.attributes["cursorRange"] = cr->dump();
    } else {
      ev.cursor_range = range;
    }
  }

  if (auto doc = j.find("currentDoc"); doc != j.end() && doc->is_string() &&
                                       !doc->get_ref<const std::string&>().empty()) {
    ev.current_doc = doc->get<std::string>();
  }

  static constexpr std::array<std::string_view, 6> kTyped = {
      "eventName", "eventSource", "eventTimestamp", "timestampMs", "textDelta", "currentDoc"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(kTyped.begin(), kTyped.end(), it.key()) != kTyped.end()) continue;
    if (it.key() == "cursorRange" && (ev.cursor_range || ev.attributes.count("cursorRange"))) continue;
    ev.attributes[it.key()] = it->dump();
  }
  return rec;
}

void order_and_index(std::vector<RawRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.event.timestamp_ms < b.event.timestamp_ms;
  });
  const std::int64_t origin = records.front().event.timestamp_ms;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].event.timestamp_ms -= origin;
    records[i].event.event_index = i;
  }
}

Session finish(std::string session_id, std::vector<Event> events) {
  Session s;
  s.session_id = std::move(session_id);
  s.final_doc = replay_final_document(events);
  s.events = std::move(events);
  return s;
}

Session parse_jsonl(std::string_view raw, const std::string& session_id) {
  std::vector<RawRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    ++line_no;
    std::string_view line = raw.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      records.push_back(parse_jsonl_line(line, line_no, session_id));
    }
    pos = nl + 1;
  }
  if (records.empty()) throw EmptySession();
  order_and_index(records);

  // Resolve deltas against the running document in timestamp order.
  std::u16string doc;
  std::vector<Event> events;
  events.reserve(records.size());
  for (auto& rec : records) {
    Event& ev = rec.event;
    if (rec.has_ops) {
      ResolvedEdit edit = resolve_ops(doc, rec.ops);
      ev.cursor_range = edit.range;
      if (ev.name == EventName::TextDelete) {
        const std::size_t s = std::min(edit.range.start, doc.size());
        const std::size_t e = std::clamp(edit.range.end, s, doc.size());
        if (e > s) ev.text_delta = to_utf8(std::u16string_view(doc).substr(s, e - s));
      } else if (!edit.inserted.empty()) {
        ev.text_delta = to_utf8(edit.inserted);
      }
      if (ev.name == EventName::TextInsert || ev.name == EventName::TextDelete) {
        apply_edit(doc, ev);
      } else {
        doc = std::move(edit.after);
      }
    }
    if (ev.current_doc) doc = to_utf16(*ev.current_doc);
    events.push_back(std::move(ev));
  }
  return finish(session_id, std::move(events));
}

Session parse_csv(std::string_view raw, const std::string& fallback_id) {
  csv::Table table(raw);
  auto col = [&](std::string_view name, bool required) -> std::optional<std::size_t> {
    auto c = table.column(name);
    if (!c && required) throw MalformedRecord(1, "missing column " + std::string(name));
    return c;
  };
  const auto c_session = *col("sessionId", true);
  col("eventIndex", true);
  const auto c_name = *col("eventName", true);
  const auto c_source = *col("eventSource", true);
  const auto c_ts = *col("timestampMs", true);
  const auto c_delta = col("textDelta", false);
  const auto c_cs = col("cursorStart", false);
  const auto c_ce = col("cursorEnd", false);
  const auto c_doc = col("currentDoc", false);
  const auto c_attr = col("attributes", false);

  std::vector<RawRecord> records;
  std::optional<std::string> session_id;
  for (const auto& row : table.rows()) {
    RawRecord rec;
    rec.line_no = row.line_no;
    Event& ev = rec.event;
    std::string id(table.cell(row, c_session));
    if (id.empty()) id = fallback_id;
    if (session_id && *session_id != id) throw MalformedRecord(row.line_no, "more than one sessionId in file");
    session_id = id;
    ev.session_id = id;
    const std::string name = trim(table.cell(row, c_name));
    if (name.empty()) throw MalformedRecord(row.line_no, "missing eventName");
    ev.name = require_event_name(name);
    if (name != to_string(ev.name)) ev.attributes["rawEventName"] = json(name).dump();
    ev.source = parse_source(trim(table.cell(row, c_source)), row.line_no);
    auto ts = parse_int<std::int64_t>(trim(table.cell(row, c_ts)));
    if (!ts || *ts < 0) throw MalformedRecord(row.line_no, "timestampMs must be a non-negative integer");
    ev.timestamp_ms = *ts;
    if (c_delta) {
      std::string delta(table.cell(row, *c_delta));
      if (!delta.empty()) ev.text_delta = std::move(delta);
    }
    if (c_cs && c_ce) {
      const std::string s = trim(table.cell(row, *c_cs));
      const std::string e = trim(table.cell(row, *c_ce));
      if (!s.empty() || !e.empty()) {
        auto start = parse_int<std::size_t>(s);
        auto end = parse_int<std::size_t>(e);
        if (!start || !end || *end < *start) throw MalformedRecord(row.line_no, "bad cursor range");
        ev.cursor_range = CursorRange{*start, *end};
      }
    }
    if (c_doc) {
      std::string doc(table.cell(row, *c_doc));
      if (!doc.empty()) ev.current_doc = std::move(doc);
    }
    if (c_attr && !table.cell(row, *c_attr).empty()) {
      try {
        const json attrs = json::parse(table.cell(row, *c_attr));
        for (auto it = attrs.begin(); it != attrs.end(); ++it) {
          ev.attributes[it.key()] = it->get<std::string>();
        }
      } catch (const json::exception& e) {
        throw MalformedRecord(row.line_no, std::string("bad attributes: ") + e.what());
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw EmptySession();
  order_and_index(records);
  std::vector<Event> events;
  events.reserve(records.size());
  for (auto& rec : records) events.push_back(std::move(rec.event));
  return finish(*session_id, std::move(events));
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::string_view to_string(EventName name) { return kEventNames[static_cast<std::size_t>(name)]; }

std::optional<EventName> parse_event_name(std::string_view raw) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == raw) return static_cast<EventName>(i);
  }
  if (raw == "suggestion-select") return EventName::SuggestionAccept;
  if (raw == "suggestion-reopen") return EventName::SuggestionOpen;
  return std::nullopt;
}

std::string_view to_string(EventSource source) { return source == EventSource::User ? "user" : "api"; }

std::string_view to_string(Genre genre) {
  switch (genre) {
    case Genre::Creative:
      return "creative";
    case Genre::Argumentative:
      return "argumentative";
    case Genre::Unknown:
      break;
  }
  return "unknown";
}

Session parse_session_log(std::string_view raw, LogFormat format, std::string_view session_id) {
  const std::string id(session_id);
  return format == LogFormat::CoauthorJsonl ? parse_jsonl(raw, id) : parse_csv(raw, id);
}

Session parse_session_log(std::istream& raw, LogFormat format, std::string_view session_id) {
  return parse_session_log(read_all(raw), format, session_id);
}

std::string replay_final_document(const std::vector<Event>& events) {
  std::u16string doc;
  for (const auto& ev : events) {
    apply_edit(doc, ev);
    if (ev.current_doc) doc = to_utf16(*ev.current_doc);
  }
  return to_utf8(doc);
}

std::vector<SurveyResponse> load_survey(std::string_view raw) {
  csv::Table table(raw);
  auto id_col = table.column("sessionId");
  if (!id_col) id_col = table.column("session_id");
  if (!id_col) throw MalformedRecord(1, "survey has no sessionId column");
  std::vector<std::pair<std::string, std::size_t>> questions;
  for (std::size_t c = 0; c < table.header().size(); ++c) {
    const std::string h = trim(table.header()[c]);
    if (h.size() >= 2 && (h[0] == 'Q' || h[0] == 'q') &&
        std::all_of(h.begin() + 1, h.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      questions.emplace_back("Q" + h.substr(1), c);
    }
  }
  std::vector<SurveyResponse> out;
  std::size_t data_row = 0;
  for (const auto& row : table.rows()) {
    ++data_row;
    SurveyResponse resp;
    resp.session_id = trim(table.cell(row, *id_col));
    if (resp.session_id.empty()) throw MalformedRecord(row.line_no, "empty sessionId");
    for (const auto& [q, c] : questions) {
      const std::string cell = trim(table.cell(row, c));
      if (cell.empty()) continue;
      auto v = parse_int<long>(cell);
      if (!v) throw MalformedRecord(row.line_no, "non-integer score '" + cell + "'");
      if (*v < 1 || *v > 7) throw ScoreOutOfRange(data_row, *v);
      resp.answers[q] = static_cast<int>(*v);
    }
    out.push_back(std::move(resp));
  }
  return out;
}

std::vector<SurveyResponse> load_survey(std::istream& raw) { return load_survey(read_all(raw)); }

std::map<std::string, Genre> load_genre_index(std::string_view raw) {
  csv::Table table(raw);
  auto id_col = table.column("sessionId");
  auto genre_col = table.column("genre");
  if (!id_col || !genre_col) throw MalformedRecord(1, "genre index needs sessionId and genre columns");
  std::map<std::string, Genre> out;
  for (const auto& row : table.rows()) {
    std::string g = trim(table.cell(row, *genre_col));
    std::transform(g.begin(), g.end(), g.begin(), [](unsigned char c) { return std::tolower(c); });
    Genre genre = Genre::Unknown;
    if (g == "creative") genre = Genre::Creative;
    if (g == "argumentative") genre = Genre::Argumentative;
    out[trim(table.cell(row, *id_col))] = genre;
  }
  return out;
}

std::string to_normalized_csv(const Session& session) {
  std::ostringstream out;
  out << csv::join({kNormalizedColumns.begin(), kNormalizedColumns.end()}) << '\n';
  for (const auto& ev : session.events) {
    std::string attrs;
    if (!ev.attributes.empty()) attrs = json(ev.attributes).dump();
    out << csv::join({ev.session_id, std::to_string(ev.event_index), std::string(to_string(ev.name)),
                      std::string(to_string(ev.source)), std::to_string(ev.timestamp_ms),
                      ev.text_delta.value_or(""),
                      ev.cursor_range ? std::to_string(ev.cursor_range->start) : "",
                      ev.cursor_range ? std::to_string(ev.cursor_range->end) : "",
                      ev.current_doc.value_or(""), attrs})
        << '\n';
  }
  return out.str();
}

}  // namespace cowrite::ingest
