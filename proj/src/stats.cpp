#include "cowrite/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cowrite/error.hpp"

namespace cowrite::stats {

Stars stars_for(double p) {
  if (p <= 0.0001) return Stars::Four;
  if (p <= 0.001) return Stars::Three;
  if (p <= 0.01) return Stars::Two;
  if (p <= 0.05) return Stars::One;
  return Stars::None;
}

std::string_view to_string(Stars s) {
  switch (s) {
    case Stars::One:
      return "*";
    case Stars::Two:
      return "**";
    case Stars::Three:
      return "***";
    case Stars::Four:
      return "****";
    case Stars::None:
      break;
  }
  return "ns";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Wichura's AS 241 (PPND16), about 16 digits.
double normal_quantile(double p) {
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

namespace {

double poly(const double* c, int n, double x) {
  double v = c[n - 1];
  for (int i = n - 2; i >= 0; --i) v = v * x + c[i];
  return v;
}

}  // namespace

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3) throw SampleTooSmall("Shapiro-Wilk needs at least 3 values");
  if (n > 5000) throw SampleTooLarge("Shapiro-Wilk supports at most 5000 values");
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x)
    if (!std::isfinite(v)) throw NonFiniteInput();
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (range <= 1e-19 * std::max(1.0, std::abs(x.back()))) throw ZeroVariance();

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  // Coefficients for the upper half; a[0] pairs the extremes.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation between the antisymmetric coefficient
  // vector and the ordered sample.
  std::vector<double> full(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    full[i] = -a[i];
    full[n - 1 - i] = a[i];
  }
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = (x[i] - xbar) / range;
    ssa += full[i] * full[i];
    ssx += dx * dx;
    sax += full[i] * dx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  TestResult out;
  out.statistic = w;
  out.n_a = n;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;
    constexpr double stqr = 1.04719755119660;
    out.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
  } else {
    double y = std::log(w1);
    double m, s;
    if (n <= 11) {
      const double gamma = poly(g, 2, an);
      if (y >= gamma) {
        out.p_value = 1e-99;
        out.stars = stars_for(out.p_value);
        return out;
      }
      y = -std::log(gamma - y);
      m = poly(c3, 4, an);
      s = std::exp(poly(c4, 4, an));
    } else {
      const double xx = std::log(an);
      m = poly(c5, 4, xx);
      s = std::exp(poly(c6, 3, xx));
    }
    out.p_value = 1.0 - normal_cdf((y - m) / s);
    out.p_value = 0.5 * std::erfc(((y - m) / s) / std::sqrt(2.0));
  }
  out.p_value = std::clamp(out.p_value, 0.0, 1.0);
  out.stars = stars_for(out.p_value);
  return out;
}

namespace {

// Number of arrangements of m and n items with U = u, for all u.
std::vector<double> u_distribution(std::size_t m, std::size_t n) {
  // f[i][j][u] with rolling over i.
  const std::size_t max_u = m * n;
  std::vector<std::vector<double>> prev(n + 1, std::vector<double>(max_u + 1, 0.0));
  for (std::size_t j = 0; j <= n; ++j) prev[j][0] = 1.0;  // i = 0
  for (std::size_t i = 1; i <= m; ++i) {
    std::vector<std::vector<double>> cur(n + 1, std::vector<double>(max_u + 1, 0.0));
    cur[0][0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
      for (std::size_t u = 0; u <= i * j; ++u) {
        // Largest item belongs to the first sample (beats all j others) or not.
        double v = cur[j - 1][u];
        if (u >= j) v += prev[j][u - j];
        cur[j][u] = v;
      }
    }
    prev = std::move(cur);
  }
  return prev[n];
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptySample();
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double v : a) all.emplace_back(v, 0);
  for (double v : b) all.emplace_back(v, 1);
  std::stable_sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 0) rank_sum_a += midrank;
    }
    if (j - i > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }

  TestResult out;
  out.n_a = na;
  out.n_b = nb;
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb), dn = static_cast<double>(n);
  out.statistic = rank_sum_a - dna * (dna + 1.0) / 2.0;

  if (n <= 16 && !ties) {
    const auto counts = u_distribution(na, nb);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::llround(out.statistic));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) lower += counts[k];
      if (k >= u) upper += counts[k];
    }
    out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    out.exact = true;
  } else {
    const double mu = dna * dnb / 2.0;
    const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
      out.p_value = 1.0;
    } else {
      const double z = (std::abs(out.statistic - mu) - 0.5) / std::sqrt(var);
      out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
  }
  out.stars = stars_for(out.p_value);
  return out;
}

PairwiseGrid pairwise_cluster_tests(const cluster::ClusterModel& model, const std::map<std::string, double>& values) {
  PairwiseGrid grid;
  std::vector<std::vector<double>> groups(model.k);
  for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
    auto it = values.find(model.session_ids[i]);
    if (it == values.end() || !std::isfinite(it->second)) {
      ++grid.missing;
      continue;
    }
    groups[static_cast<std::size_t>(model.labels[i])].push_back(it->second);
  }
  if (grid.missing) spdlog::info("pairwise tests: {} sessions without a value dropped", grid.missing);
  for (std::size_t a = 0; a < model.k; ++a) {
    for (std::size_t b = a + 1; b < model.k; ++b) {
      PairTest t{static_cast<int>(a), static_cast<int>(b), std::nullopt};
      if (!groups[a].empty() && !groups[b].empty()) t.result = mann_whitney_u(groups[a], groups[b]);
      grid.pairs.push_back(t);
    }
  }
  return grid;
}

std::vector<double> holm_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return p[l] < p[r]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double adj = std::min(1.0, static_cast<double>(m - rank) * p[order[rank]]);
    running = std::max(running, adj);
    out[order[rank]] = running;
  }
  return out;
}

}  // namespace cowrite::stats
