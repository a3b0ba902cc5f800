#include "cowrite/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cowrite/random.hpp"

namespace cowrite::synthetic {

using nlohmann::json;

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Rising:
      return "rising";
    case Family::Falling:
      return "falling";
    case Family::FlatHigh:
      return "flat-high";
    case Family::MidPeaked:
      return "mid-peaked";
  }
  return "rising";
}

double intensity(Family f, double u) {
  u = std::clamp(u, 0.0, 1.0);
  switch (f) {
    case Family::Rising:
      return 0.05 + 0.9 * u;
    case Family::Falling:
      return 0.95 - 0.9 * u;
    case Family::FlatHigh:
      return 0.85;
    case Family::MidPeaked:
      return 0.05 + 0.9 * std::sin(std::numbers::pi * u);
  }
  return 0.0;
}

PlantedCorpus planted_features(std::size_t per_family, std::uint64_t seed, std::size_t min_len, std::size_t max_len) {
  Rng rng(seed);
  PlantedCorpus out;
  for (std::size_t f = 0; f < kFamilyCount; ++f) {
    for (std::size_t s = 0; s < per_family; ++s) {
      const auto len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
      features::FeatureSeries fs;
      fs.session_id = std::string(to_string(static_cast<Family>(f))) + "-" + std::to_string(s);
      for (std::size_t t = 0; t < len; ++t) {
        const double u = len == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(len - 1);
        const double x = intensity(static_cast<Family>(f), u);
        features::FeatureVector v;
        v.calls = std::max(0.0, std::round(8.0 * x + rng.normal(0.0, 0.5)));
        v.accept_rate = std::clamp(0.8 * x + rng.normal(0.0, 0.04), 0.0, 1.0);
        v.modify_rate = std::clamp(0.5 * x + rng.normal(0.0, 0.04), 0.0, 1.0);
        v.ai_char_rate = std::clamp(0.7 * x + rng.normal(0.0, 0.04), 0.0, 1.0);
        fs.windows.push_back(v);
      }
      out.series.push_back(std::move(fs));
      out.families.push_back(static_cast<int>(f));
    }
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 32> kWords = {
    "river", "lantern", "quiet",  "morning", "city",   "garden", "letter", "stone",  "window", "winter", "bright",
    "simple", "story",  "market", "bridge",  "forest", "paper",  "music",  "silver", "harbor", "voice",  "circle",
    "journey", "orange", "signal", "meadow", "tower",  "candle", "friend", "echo",   "valley", "thunder"};

class LogWriter {
 public:
  LogWriter(std::string session_id, std::int64_t start_ms) : id_(std::move(session_id)), start_(start_ms) {}

  void emit(std::string_view name, std::string_view source, std::int64_t t_ms, json extra = json::object()) {
    json j = std::move(extra);
    j["eventName"] = name;
    j["eventSource"] = source;
    j["eventTimestamp"] = start_ + t_ms;
    j["cursorRange"] = {{"index", cursor_}, {"length", 0}};
    j["sessionId"] = id_;
    out_ << j.dump() << '\n';
  }

  void initialize(std::string prompt) {
    doc_ = std::move(prompt);
    cursor_ = doc_.size();
    emit("system-initialize", "api", 0, {{"currentDoc", doc_}});
  }

  void insert(std::size_t pos, const std::string& text, std::string_view source, std::int64_t t_ms) {
    json ops = json::array();
    if (pos > 0) ops.push_back({{"retain", pos}});
    ops.push_back({{"insert", text}});
    doc_.insert(pos, text);
    cursor_ = pos + text.size();
    emit("text-insert", source, t_ms, {{"textDelta", {{"ops", ops}}}});
  }

  void erase(std::size_t pos, std::size_t len, std::int64_t t_ms) {
    json ops = json::array();
    if (pos > 0) ops.push_back({{"retain", pos}});
    ops.push_back({{"delete", len}});
    doc_.erase(pos, len);
    cursor_ = pos;
    emit("text-delete", "user", t_ms, {{"textDelta", {{"ops", ops}}}});
  }

  void move_cursor(std::size_t pos, std::int64_t t_ms) {
    const bool back = pos < cursor_;
    cursor_ = pos;
    emit(back ? "cursor-backward" : "cursor-forward", "user", t_ms);
  }

  const std::string& doc() const { return doc_; }
  std::string str() const { return out_.str(); }

 private:
  std::string id_;
  std::int64_t start_;
  std::string doc_;
  std::size_t cursor_ = 0;
  std::ostringstream out_;
};

std::string sentence(Rng& rng, std::size_t words) {
  std::string s;
  for (std::size_t w = 0; w < words; ++w) {
    std::string word(kWords[static_cast<std::size_t>(rng.below(kWords.size()))]);
    if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
    s += (w ? " " : "") + word;
  }
  return s + ".";
}

// Start of the last space-separated word of `doc` ending before `end`.
std::size_t word_start(const std::string& doc, std::size_t begin, std::size_t end) {
  std::size_t p = end;
  while (p > begin && doc[p - 1] != ' ') --p;
  return p;
}

}  // namespace

std::vector<SyntheticLog> synthetic_logs(std::size_t per_family, std::uint64_t seed, std::size_t min_minutes,
                                         std::size_t max_minutes) {
  std::vector<SyntheticLog> logs;
  for (std::size_t f = 0; f < kFamilyCount; ++f) {
    for (std::size_t s = 0; s < per_family; ++s) {
      const auto family = static_cast<Family>(f);
      Rng rng(derive_seed(seed, f * 100000 + s));
      SyntheticLog log;
      char id[64];
      std::snprintf(id, sizeof id, "syn%02zu%04zu", f, s);
      log.session_id = id;
      log.family = family;
      const auto minutes = min_minutes + static_cast<std::size_t>(rng.below(max_minutes - min_minutes + 1));
      LogWriter w(log.session_id, 1650000000000LL + static_cast<std::int64_t>(rng.below(1000000)));
      w.initialize("Write a story about a " + std::string(kWords[f]) + ".\n\n");
      const std::size_t prompt_len = w.doc().size();

      for (std::size_t m = 0; m < minutes; ++m) {
        const double u = minutes == 1 ? 0.0 : static_cast<double>(m) / static_cast<double>(minutes - 1);
        const double x = intensity(family, u);
        std::int64_t t = static_cast<std::int64_t>(m) * 60000 + 500;
        auto tick = [&](std::int64_t lo, std::int64_t hi) {
          t += lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
          return t;
        };
        const std::int64_t minute_end = static_cast<std::int64_t>(m + 1) * 60000 - 1;

        // User-written sentence, typed word by word at the end.
        const std::size_t typed = 1 + static_cast<std::size_t>(std::lround((1.0 - x) * 2.0));
        std::size_t last_begin = w.doc().size();
        for (std::size_t k = 0; k < typed; ++k) {
          last_begin = w.doc().size();
          const std::string text = sentence(rng, 4 + rng.below(4));
          std::size_t pos = 0;
          while (pos < text.size()) {
            std::size_t next = text.find(' ', pos + 1);
            if (next == std::string::npos) next = text.size();
            const std::string chunk = (pos == 0 ? std::string(" ") : std::string()) + text.substr(pos, next - pos);
            w.insert(w.doc().size(), chunk, "user", tick(150, 600));
            pos = next;
          }
        }
        // Occasionally move the newest sentence to the top.
        if (m > 0 && rng.uniform() < 0.15) {
          const std::string moved = w.doc().substr(last_begin + 1);
          w.erase(last_begin, w.doc().size() - last_begin, tick(300, 900));
          w.insert(prompt_len, moved + " ", "user", tick(300, 900));
          w.move_cursor(w.doc().size(), tick(100, 400));
        }
        if (rng.uniform() < 0.3) {
          w.move_cursor(w.doc().size() / 2, tick(100, 400));
          w.move_cursor(w.doc().size(), tick(100, 400));
        }

        const auto calls = static_cast<std::size_t>(std::lround(x * 5.0 + rng.normal(0.0, 0.3)));
        for (std::size_t c = 0; c < calls && t < minute_end - 8000; ++c) {
          w.emit("suggestion-get", "user", tick(200, 800));
          w.emit("suggestion-open", "api", tick(300, 900));
          const std::size_t hovers = rng.below(3);
          for (std::size_t h = 0; h < hovers; ++h) w.emit("suggestion-hover", "user", tick(100, 400));
          if (rng.uniform() < 0.15 + 0.8 * x) {
            w.emit("suggestion-select", "user", tick(200, 600));
            const std::size_t begin = w.doc().size() + 1;
            w.insert(w.doc().size(), " " + sentence(rng, 6 + rng.below(4)), "api", tick(1, 5));
            if (rng.uniform() < 0.1 + 0.5 * x) {
              const std::size_t end = w.doc().size() - 1;  // before the period
              if (rng.uniform() < 0.6) {
                const std::size_t ws = word_start(w.doc(), begin, end);
                w.erase(ws, end - ws, tick(300, 900));
                w.insert(ws, std::string(kWords[static_cast<std::size_t>(rng.below(kWords.size()))]), "user",
                         tick(200, 700));
              } else {
                w.erase(begin, end - begin, tick(300, 900));
                w.insert(begin, sentence(rng, 5), "user", tick(300, 900));
                // Drop the doubled period the rewrite leaves behind.
                w.erase(w.doc().size() - 1, 1, tick(100, 300));
              }
            }
          } else {
            w.emit("suggestion-close", "user", tick(200, 700));
          }
        }
        // Closing event so the minute is always represented.
        w.move_cursor(w.doc().size(), std::max(t + 1, minute_end - static_cast<std::int64_t>(rng.below(3000))));
      }
      log.jsonl = w.str();
      logs.push_back(std::move(log));
    }
  }
  return logs;
}

std::string synthetic_survey(const std::vector<SyntheticLog>& logs, std::uint64_t seed) {
  Rng rng(seed);
  std::ostringstream out;
  out << "sessionId";
  for (int q = 1; q <= 9; ++q) out << ",Q" << q;
  out << '\n';
  for (const auto& l : logs) {
    out << l.session_id;
    const double lean = static_cast<double>(static_cast<int>(l.family)) * 0.6;
    for (int q = 1; q <= 9; ++q) {
      const long v = std::lround(3.0 + lean + rng.normal(0.0, 1.0));
      out << ',' << std::clamp(v, 1L, 7L);
    }
    out << '\n';
  }
  return out.str();
}

std::string synthetic_genre_index(const std::vector<SyntheticLog>& logs) {
  std::ostringstream out;
  out << "sessionId,genre\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    out << logs[i].session_id << ',' << (i % 2 == 0 ? "creative" : "argumentative") << '\n';
  }
  return out.str();
}

}  // namespace cowrite::synthetic
