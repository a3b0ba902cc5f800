#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cowrite/features.hpp"

namespace cowrite::synthetic {

enum class Family { Rising, Falling, FlatHigh, MidPeaked };
inline constexpr std::size_t kFamilyCount = 4;
std::string_view to_string(Family f);

// AI-usage intensity in [0, 1] at relative session time u in [0, 1].
double intensity(Family f, double u);

struct PlantedCorpus {
  std::vector<features::FeatureSeries> series;
  std::vector<int> families;  // parallel to series
};

// Raw feature series whose four features follow the family's intensity
// curve plus noise. Lengths are uniform in [min_len, max_len].
PlantedCorpus planted_features(std::size_t per_family, std::uint64_t seed, std::size_t min_len = 8,
                               std::size_t max_len = 32);

struct SyntheticLog {
  std::string session_id;
  Family family = Family::Rising;
  std::string jsonl;
};

// Event logs in the public dataset's JSONL layout. Per minute, the number of
// suggestion requests, the acceptance odds and the chance of editing an
// accepted sentence all follow the family's intensity. Each minute is fully
// inside its 60 s window.
std::vector<SyntheticLog> synthetic_logs(std::size_t per_family, std::uint64_t seed, std::size_t min_minutes = 4,
                                         std::size_t max_minutes = 14);

// sessionId,Q1..Q9 with scores in [1, 7].
std::string synthetic_survey(const std::vector<SyntheticLog>& logs, std::uint64_t seed);
// sessionId,genre
std::string synthetic_genre_index(const std::vector<SyntheticLog>& logs);

}  // namespace cowrite::synthetic
