#include "cowrite/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cowrite/csv.hpp"
#include "cowrite/sentences.hpp"

namespace cowrite::features {

using ingest::EventName;

namespace {

std::size_t window_count(const ingest::Session& session, std::int64_t window_ms) {
  if (session.events.empty()) return 1;
  return static_cast<std::size_t>(session.events.back().timestamp_ms / window_ms) + 1;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<Window> windowize(const ingest::Session& session, int window_seconds) {
  const std::int64_t window_ms = static_cast<std::int64_t>(window_seconds) * 1000;
  std::vector<Window> windows(window_count(session, window_ms));
  for (std::size_t i = 0; i < windows.size(); ++i) windows[i].index = i;
  for (const auto& ev : session.events) {
    windows[static_cast<std::size_t>(ev.timestamp_ms / window_ms)].events.push_back(&ev);
  }
  return windows;
}

Extraction extract(const ingest::Session& session, int window_seconds) {
  const std::int64_t window_ms = static_cast<std::int64_t>(window_seconds) * 1000;
  const std::size_t n = window_count(session, window_ms);
  auto window_of = [&](std::size_t event_index) {
    return static_cast<std::size_t>(session.events[event_index].timestamp_ms / window_ms);
  };

  std::vector<std::size_t> calls(n, 0), accepts(n, 0), inserted(n, 0), ai_chars(n, 0), modified(n, 0);
  std::vector<std::size_t> accept_events;
  std::set<std::int32_t> modified_suggestions;

  coding::SentenceTracker tracker(session);
  while (!tracker.finished()) {
    const coding::Step& step = tracker.advance();
    const auto& ev = session.events[step.event_index];
    const std::size_t w = window_of(step.event_index);
    if (ev.name == EventName::SuggestionGet) ++calls[w];
    if (ev.name == EventName::SuggestionAccept) {
      ++accepts[w];
      accept_events.push_back(step.event_index);
    }
    inserted[w] += step.inserted;
    modified_suggestions.insert(step.touched_suggestions.begin(), step.touched_suggestions.end());
  }

  std::size_t final_typed = 0, final_ai = 0;
  for (const auto& g : tracker.glyphs()) {
    if (g.initial) continue;
    ++final_typed;
    if (g.owner == coding::Owner::Api) {
      ++final_ai;
      ++ai_chars[window_of(g.event)];
    }
  }
  std::size_t modified_total = 0;
  for (std::size_t e : accept_events) {
    if (modified_suggestions.count(static_cast<std::int32_t>(e))) {
      ++modified[window_of(e)];
      ++modified_total;
    }
  }

  Extraction out;
  out.series.session_id = session.session_id;
  out.series.window_seconds = window_seconds;
  out.series.windows.resize(n);
  std::size_t total_calls = 0, total_accepts = 0;
  for (std::size_t w = 0; w < n; ++w) {
    FeatureVector& f = out.series.windows[w];
    f.calls = static_cast<double>(calls[w]);
    // An acceptance can land in the window after its request.
    f.accept_rate = std::min(1.0, ratio(accepts[w], calls[w]));
    f.modify_rate = ratio(modified[w], accepts[w]);
    f.ai_char_rate = std::min(1.0, ratio(ai_chars[w], inserted[w]));
    total_calls += calls[w];
    total_accepts += accepts[w];
  }

  SessionAggregate& agg = out.aggregate;
  agg.session_id = session.session_id;
  agg.requests = total_calls;
  agg.acceptances = total_accepts;
  agg.modified = modified_total;
  agg.totals.calls = static_cast<double>(total_calls);
  agg.totals.accept_rate = std::min(1.0, ratio(total_accepts, total_calls));
  agg.totals.modify_rate = ratio(modified_total, total_accepts);
  agg.totals.ai_char_rate = ratio(final_ai, final_typed);
  return out;
}

FeatureSeries extract_features(const ingest::Session& session, int window_seconds) {
  return extract(session, window_seconds).series;
}

namespace {

struct Moments {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> sd{};
};

template <class Range>
Moments moments(const Range& series_list) {
  Moments m;
  std::size_t count = 0;
  for (const FeatureSeries* s : series_list) {
    for (const auto& w : s->windows) {
      const auto v = w.as_array();
      for (std::size_t f = 0; f < kFeatureCount; ++f) m.mean[f] += v[f];
      ++count;
    }
  }
  if (count == 0) return m;
  for (auto& x : m.mean) x /= static_cast<double>(count);
  for (const FeatureSeries* s : series_list) {
    for (const auto& w : s->windows) {
      const auto v = w.as_array();
      for (std::size_t f = 0; f < kFeatureCount; ++f) m.sd[f] += (v[f] - m.mean[f]) * (v[f] - m.mean[f]);
    }
  }
  for (auto& x : m.sd) x = std::sqrt(x / static_cast<double>(count));
  return m;
}

FeatureVector scale(const FeatureVector& v, const Moments& m, std::array<bool, kFeatureCount>& degenerate) {
  auto a = v.as_array();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    // Relative threshold: a constant feature can leave rounding residue.
    const bool flat = m.sd[f] <= 1e-12 * std::max(1.0, std::abs(m.mean[f]));
    if (flat) degenerate[f] = true;
    a[f] = flat ? 0.0 : (a[f] - m.mean[f]) / m.sd[f];
  }
  return {a[0], a[1], a[2], a[3]};
}

}  // namespace

std::pair<std::vector<FeatureSeries>, StandardizationParams> standardize(const std::vector<FeatureSeries>& corpus,
                                                                          Scaling scaling) {
  std::vector<const FeatureSeries*> all;
  all.reserve(corpus.size());
  for (const auto& s : corpus) all.push_back(&s);
  const Moments pooled = moments(all);

  StandardizationParams params;
  params.mean = pooled.mean;
  params.std_dev = pooled.sd;
  std::vector<FeatureSeries> out = corpus;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Moments m = pooled;
    if (scaling == Scaling::PerSeries) {
      const FeatureSeries* one[] = {&corpus[i]};
      m = moments(one);
    }
    std::array<bool, kFeatureCount> flat{};
    for (auto& w : out[i].windows) w = scale(w, m, flat);
    if (scaling == Scaling::Pooled) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) params.degenerate[f] = params.degenerate[f] || flat[f];
    }
  }
  if (scaling == Scaling::PerSeries) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      params.degenerate[f] = pooled.sd[f] <= 1e-12 * std::max(1.0, std::abs(pooled.mean[f]));
    }
  }
  return {std::move(out), params};
}

std::string to_csv(const std::vector<FeatureSeries>& corpus) {
  std::ostringstream out;
  out << "sessionId,windowIndex,calls,acceptRate,modifyRate,aiCharRate\n";
  for (const auto& s : corpus) {
    for (std::size_t w = 0; w < s.windows.size(); ++w) {
      const auto& f = s.windows[w];
      out << csv::join({s.session_id, std::to_string(w), csv::format_double(f.calls),
                        csv::format_double(f.accept_rate), csv::format_double(f.modify_rate),
                        csv::format_double(f.ai_char_rate)})
          << '\n';
    }
  }
  return out.str();
}

}  // namespace cowrite::features
