#include "cowrite/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cowrite/error.hpp"
#include "cowrite/hash.hpp"

namespace cowrite::coding {

std::map<std::string, std::size_t> LexicalSimilarity::tokens(std::string_view text) {
  std::map<std::string, std::size_t> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) ++out[cur];
    cur.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
    }
  }
  flush();
  return out;
}

double LexicalSimilarity::similarity(std::string_view a, std::string_view b) {
  if (a == b) return 1.0;
  const auto ta = tokens(a), tb = tokens(b);
  if (ta.empty() || tb.empty()) return ta.empty() && tb.empty() ? 1.0 : 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, c] : ta) {
    na += static_cast<double>(c * c);
    if (auto it = tb.find(tok); it != tb.end()) dot += static_cast<double>(c * it->second);
  }
  for (const auto& [tok, c] : tb) nb += static_cast<double>(c * c);
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

namespace {

std::string pair_key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  std::string joined;
  joined.reserve(a.size() + b.size() + 1);
  joined.append(a).push_back('\x1f');
  joined.append(b);
  return sha256_hex(joined);
}

}  // namespace

HttpSimilarityProvider::HttpSimilarityProvider(HttpSimilarityOptions options)
    : options_(std::move(options)), slots_(std::clamp<std::ptrdiff_t>(options_.max_in_flight, 1, 64)) {
  const auto scheme_end = options_.url.find("://");
  const auto path_begin = options_.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  scheme_host_ = options_.url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : options_.url.substr(path_begin);
  load_cache();
}

void HttpSimilarityProvider::load_cache() {
  if (options_.cache_file.empty()) return;
  std::ifstream in(options_.cache_file);
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str() + tab + 1, &end);
    if (end != line.c_str() + tab + 1 && std::isfinite(v)) cache_[line.substr(0, tab)] = v;
  }
}

std::size_t HttpSimilarityProvider::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t HttpSimilarityProvider::fallbacks() const {
  std::lock_guard lock(mutex_);
  return fallbacks_;
}

double HttpSimilarityProvider::query(std::string_view a, std::string_view b) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{slots_};
  {
    std::lock_guard lock(mutex_);
    ++requests_;
  }
  try {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(options_.timeout_seconds);
    client.set_read_timeout(options_.timeout_seconds);
    const nlohmann::json body = {{"a", std::string(a)}, {"b", std::string(b)}};
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) throw ProviderUnavailable("no response from " + options_.url);
    if (res->status != 200) throw ProviderUnavailable("HTTP " + std::to_string(res->status) + " from " + options_.url);
    const auto j = nlohmann::json::parse(res->body);
    const auto it = j.find("similarity");
    if (it == j.end() || !it->is_number()) throw ProviderUnavailable("response without a numeric similarity");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw ProviderUnavailable("non-finite similarity");
    return std::clamp(v, 0.0, 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderUnavailable(std::string("unreadable response: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ProviderUnavailable(std::string("bad endpoint: ") + e.what());
  }
}

double HttpSimilarityProvider::similarity(std::string_view a, std::string_view b) {
  if (a == b) return 1.0;
  const std::string key = pair_key(a, b);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  double v;
  bool remote = true;
  try {
    v = query(a, b);
  } catch (const ProviderUnavailable& e) {
    remote = false;
    v = lexical_.similarity(a, b);
    std::lock_guard lock(mutex_);
    ++fallbacks_;
    if (!warned_) {
      spdlog::warn("similarity endpoint unavailable ({}); using lexical similarity", e.what());
      warned_ = true;
    }
  }
  std::lock_guard lock(mutex_);
  auto [it, fresh] = cache_.emplace(key, v);
  // Only endpoint answers are persisted.
  if (fresh && remote && !options_.cache_file.empty()) {
    std::ofstream out(options_.cache_file, std::ios::app);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << '\t' << buf << '\n';
  }
  return it->second;
}

std::unique_ptr<SimilarityProvider> make_provider(std::string_view kind, const std::filesystem::path& cache_file) {
  if (kind == "lexical") return std::make_unique<LexicalSimilarity>();
  if (kind == "http") {
    const char* url = std::getenv("EMBED_URL");
    if (url == nullptr || *url == '\0') {
      spdlog::warn("EMBED_URL is not set; using lexical similarity");
      return std::make_unique<LexicalSimilarity>();
    }
    HttpSimilarityOptions opt;
    opt.url = url;
    opt.cache_file = cache_file;
    return std::make_unique<HttpSimilarityProvider>(std::move(opt));
  }
  throw ConfigError("unknown similarity provider '" + std::string(kind) + "'");
}

}  // namespace cowrite::coding
