#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>

namespace cowrite::coding {

// Symmetric sentence similarity in [0, 1]; similarity(x, x) = 1.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(std::string_view a, std::string_view b) = 0;
  virtual std::string name() const = 0;
};

// Cosine between token-count vectors. Tokens are whitespace-separated after
// ASCII lowercasing and removal of ASCII punctuation.
class LexicalSimilarity final : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) override;
  std::string name() const override { return "lexical"; }

  static std::map<std::string, std::size_t> tokens(std::string_view text);
};

struct HttpSimilarityOptions {
  std::string url;                   // e.g. http://127.0.0.1:8080/similarity
  std::filesystem::path cache_file;  // empty: in-memory cache only
  std::ptrdiff_t max_in_flight = 4;
  int timeout_seconds = 10;
};

// Client for an external scoring endpoint. Request: POST {"a": ..., "b": ...};
// response: {"similarity": x}. Answers are cached by the SHA-256 of the
// unordered pair and appended to the cache file, so a rerun with the same
// cache makes no requests. When the endpoint fails the lexical score is used
// for that pair and a warning is logged once.
class HttpSimilarityProvider final : public SimilarityProvider {
 public:
  explicit HttpSimilarityProvider(HttpSimilarityOptions options);

  double similarity(std::string_view a, std::string_view b) override;
  std::string name() const override { return "http"; }

  std::size_t requests() const;
  std::size_t fallbacks() const;

  // Throws ProviderUnavailable on any transport or format failure.
  double query(std::string_view a, std::string_view b);

 private:
  void load_cache();

  HttpSimilarityOptions options_;
  std::string scheme_host_;
  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, double> cache_;
  std::counting_semaphore<64> slots_;
  std::size_t requests_ = 0;
  std::size_t fallbacks_ = 0;
  bool warned_ = false;
  LexicalSimilarity lexical_;
};

// "lexical", or "http" with the endpoint from EMBED_URL.
std::unique_ptr<SimilarityProvider> make_provider(std::string_view kind, const std::filesystem::path& cache_file);

}  // namespace cowrite::coding
