#include "cowrite/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cowrite/error.hpp"
#include "cowrite/svg.hpp"

namespace cowrite::plot {

namespace {

struct Box {
  double x, y, w, h;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

// Frame with four ticks per axis.
void axes(SvgWriter& svg, const Box& b, const Range& xr, const Range& yr, std::string_view xlabel,
          std::string_view ylabel) {
  svg.rect(b.x, b.y, b.w, b.h, "none", "#000000", 1.0);
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double px = b.x + b.w * i / 4.0;
    const double py = b.y + b.h - b.h * i / 4.0;
    svg.line(px, b.y + b.h, px, b.y + b.h + 5, "#000000", 1.0);
    svg.text(px, b.y + b.h + 18, short_num(fx), 12.0, "middle");
    svg.line(b.x - 5, py, b.x, py, "#000000", 1.0);
    svg.text(b.x - 8, py + 4, short_num(fy), 12.0, "end");
  }
  svg.text(b.x + b.w / 2, b.y + b.h + 36, xlabel, 12.0, "middle");
  svg.text(b.x - 48, b.y + b.h / 2, ylabel, 12.0, "middle", "#000000", -90.0);
}

}  // namespace

std::string render_elbow(const cluster::ElbowCurve& curve, std::string_view comment) {
  SvgWriter svg(kCanvasWidth, kCanvasHeight, comment);
  const Box b{100, 60, 800, 560};
  Range xr, yr;
  for (const auto& [k, inertia] : curve.points) {
    xr.add(static_cast<double>(k));
    yr.add(inertia);
  }
  xr.pad();
  yr.pad();
  svg.text(kCanvasWidth / 2, 36, "Elbow curve", 12.0, "middle");
  axes(svg, b, xr, yr, "k", "DTW inertia");
  std::vector<std::pair<double, double>> pts;
  for (const auto& [k, inertia] : curve.points) {
    pts.emplace_back(xr.map(static_cast<double>(k), b.x, b.x + b.w), yr.map(inertia, b.y + b.h, b.y));
  }
  if (pts.size() > 1) svg.polyline(pts, kPalette[0], 2.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    svg.circle(pts[i].first, pts[i].second, 4.0, kPalette[0]);
    if (curve.selected_k && curve.points[i].first == *curve.selected_k) {
      svg.circle(pts[i].first, pts[i].second, 9.0, "none", std::string(kNegative));
      svg.text(pts[i].first + 12, pts[i].second - 12, "knee k = " + std::to_string(*curve.selected_k), 12.0,
               "start", kNegative);
    }
  }
  return svg.finish();
}

std::string render_trajectories(const std::vector<cluster::ClusterProfile>& profiles, std::string_view comment) {
  SvgWriter svg(kCanvasWidth, kCanvasHeight, comment);
  const std::array<Box, features::kFeatureCount> panels{
      Box{90, 50, 340, 230}, Box{570, 50, 340, 230}, Box{90, 390, 340, 230}, Box{570, 390, 340, 230}};
  for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
    const Box& b = panels[f];
    Range xr, yr;
    std::size_t len = 1;
    for (const auto& p : profiles) {
      len = std::max(len, p.trajectory.length());
      for (std::size_t t = 0; t < p.trajectory.length(); ++t) yr.add(p.trajectory.at(t, f));
    }
    xr.add(0);
    xr.add(static_cast<double>(len - 1));
    xr.pad();
    yr.pad();
    svg.text(b.x + b.w / 2, b.y - 12, features::kFeatureNames[f], 12.0, "middle");
    axes(svg, b, xr, yr, "window", "standardized value");
    for (const auto& p : profiles) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t t = 0; t < p.trajectory.length(); ++t) {
        pts.emplace_back(xr.map(static_cast<double>(t), b.x, b.x + b.w), yr.map(p.trajectory.at(t, f), b.y + b.h, b.y));
      }
      const auto color = kPalette[static_cast<std::size_t>(p.label) % kPaletteSize];
      if (pts.size() > 1) {
        svg.polyline(pts, color, 2.0);
      } else if (pts.size() == 1) {
        svg.circle(pts[0].first, pts[0].second, 3.0, color);
      }
    }
  }
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const double x = 90 + static_cast<double>(i) * 150;
    const auto color = kPalette[static_cast<std::size_t>(profiles[i].label) % kPaletteSize];
    svg.rect(x, 694, 14, 14, color);
    svg.text(x + 20, 706, "cluster " + std::to_string(profiles[i].label) + " (n = " + std::to_string(profiles[i].n) + ")");
  }
  return svg.finish();
}

namespace {

void draw_network(SvgWriter& svg, const NetworkView& view, const Box& b) {
  for (const auto& n : view.nodes) {
    if (!std::isfinite(n[0]) || !std::isfinite(n[1])) throw NonFiniteInput();
  }
  Range xr, yr;
  for (const auto& n : view.nodes) {
    xr.add(n[0]);
    yr.add(n[1]);
  }
  for (const auto& p : view.points) {
    xr.add(p[0]);
    yr.add(p[1]);
  }
  xr.pad();
  yr.pad();
  // Equal scale on both axes, centred in the box.
  const double scale = std::min(b.w / (xr.hi - xr.lo), b.h / (yr.hi - yr.lo)) * 0.9;
  const double cx = b.x + b.w / 2, cy = b.y + b.h / 2;
  const double mx = (xr.lo + xr.hi) / 2, my = (yr.lo + yr.hi) / 2;
  auto px = [&](double v) { return cx + (v - mx) * scale; };
  auto py = [&](double v) { return cy - (v - my) * scale; };

  svg.text(b.x + b.w / 2, b.y + 14, view.title, 12.0, "middle");
  double biggest = 0.0;
  for (double w : view.weights) biggest = std::max(biggest, std::abs(w));
  for (std::size_t e = 0; e < ena::kEdgeCount; ++e) {
    const double w = view.weights[e];
    if (w == 0.0 || biggest == 0.0) continue;
    const auto [a, c] = ena::edge_codes(e);
    const auto& na = view.nodes[static_cast<std::size_t>(a)];
    const auto& nc = view.nodes[static_cast<std::size_t>(c)];
    const double width = kMinStroke + (kMaxStroke - kMinStroke) * std::abs(w) / biggest;
    const std::string_view color = view.signed_edges ? (w > 0 ? kPositive : kNegative) : std::string_view("#555555");
    svg.line(px(na[0]), py(na[1]), px(nc[0]), py(nc[1]), color, width);
  }
  for (std::size_t i = 0; i < view.points.size(); ++i) {
    const int g = i < view.point_groups.size() ? view.point_groups[i] : 0;
    svg.circle(px(view.points[i][0]), py(view.points[i][1]), 2.5,
               kPalette[static_cast<std::size_t>(std::max(g, 0)) % kPaletteSize]);
  }
  for (std::size_t c = 0; c < coding::kCodeCount; ++c) {
    const double x = px(view.nodes[c][0]), y = py(view.nodes[c][1]);
    svg.circle(x, y, 5.0, "#000000");
    svg.text(x + 7, y - 7, coding::to_string(static_cast<coding::Code>(c)), 12.0);
  }
  if (view.signed_edges) {
    svg.line(b.x + 10, b.y + b.h - 22, b.x + 40, b.y + b.h - 22, kPositive, 4.0);
    svg.text(b.x + 46, b.y + b.h - 18, view.positive_label);
    svg.line(b.x + 10, b.y + b.h - 6, b.x + 40, b.y + b.h - 6, kNegative, 4.0);
    svg.text(b.x + 46, b.y + b.h - 2, view.negative_label);
  }
}

}  // namespace

std::string render_network(const NetworkView& view, std::string_view comment) {
  SvgWriter svg(kCanvasWidth, kCanvasHeight, comment);
  draw_network(svg, view, Box{20, 20, kCanvasWidth - 40, kCanvasHeight - 40});
  return svg.finish();
}

std::string render_network_grid(const std::vector<NetworkView>& views, std::string_view comment) {
  SvgWriter svg(kCanvasWidth, kCanvasHeight, comment);
  const double w = kCanvasWidth / 2, h = kCanvasHeight / 2;
  for (std::size_t i = 0; i < views.size() && i < 4; ++i) {
    const Box b{(i % 2) * w + 10, static_cast<double>(i / 2) * h + 10, w - 20, h - 20};
    svg.rect(b.x, b.y, b.w, b.h, "none", "#CCCCCC", 1.0);
    draw_network(svg, views[i], b);
  }
  return svg.finish();
}

}  // namespace cowrite::plot
