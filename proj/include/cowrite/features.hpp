#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cowrite/ingest.hpp"

namespace cowrite::features {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"calls", "acceptRate", "modifyRate",
                                                                        "aiCharRate"};

struct FeatureVector {
  double calls = 0.0;
  double accept_rate = 0.0;
  double modify_rate = 0.0;
  double ai_char_rate = 0.0;

  std::array<double, kFeatureCount> as_array() const { return {calls, accept_rate, modify_rate, ai_char_rate}; }
  bool operator==(const FeatureVector&) const = default;
};

struct FeatureSeries {
  std::string session_id;
  std::vector<FeatureVector> windows;
  int window_seconds = 60;
};

// The same four measures taken over the whole session (final-essay level).
struct SessionAggregate {
  std::string session_id;
  FeatureVector totals;
  std::size_t requests = 0;
  std::size_t acceptances = 0;
  std::size_t modified = 0;
};

struct StandardizationParams {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> std_dev{};
  std::array<bool, kFeatureCount> degenerate{};
};

enum class Scaling { Pooled, PerSeries };

struct Window {
  std::size_t index = 0;
  std::vector<const ingest::Event*> events;
};

// Half-open windows [i*w, (i+1)*w) seconds from session start; the count is
// floor(last timestamp / w) + 1 so the trailing partial window is kept.
std::vector<Window> windowize(const ingest::Session& session, int window_seconds);

struct Extraction {
  FeatureSeries series;
  SessionAggregate aggregate;
};

// Per-window features plus session totals, from one replay of the session.
Extraction extract(const ingest::Session& session, int window_seconds = 60);
FeatureSeries extract_features(const ingest::Session& session, int window_seconds = 60);

// Pooled: mean and sd over every window of every series. Per-series: each
// series is scaled by its own statistics (params then hold the pooled values
// for reference). Population sd; degenerate features are centred only.
std::pair<std::vector<FeatureSeries>, StandardizationParams> standardize(
    const std::vector<FeatureSeries>& corpus, Scaling scaling = Scaling::Pooled);

std::string to_csv(const std::vector<FeatureSeries>& corpus);

}  // namespace cowrite::features
