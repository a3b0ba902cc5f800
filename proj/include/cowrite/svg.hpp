#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cowrite::plot {

// Minimal SVG 1.1 writer. Coordinates are printed with two decimals, so
// equal input gives equal bytes.
class SvgWriter {
 public:
  SvgWriter(double width, double height, std::string_view comment = {});

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none",
            double stroke_width = 0.0);
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
            std::string_view dash = {});
  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width);
  void circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke = "none");
  // anchor: start, middle or end.
  void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "start",
            std::string_view fill = "#000000", double rotate = 0.0);
  void open_group(double dx, double dy);
  void close_group();

  std::string finish();

  static std::string num(double v);
  static std::string escape(std::string_view s);

 private:
  std::string out_;
  int depth_ = 0;
};

// Okabe-Ito colours, black last.
inline constexpr std::string_view kPalette[] = {"#0072B2", "#E69F00", "#009E73", "#CC79A7",
                                                "#56B4E9", "#D55E00", "#F0E442", "#000000"};
inline constexpr std::size_t kPaletteSize = 8;
inline constexpr std::string_view kPositive = "#0072B2";
inline constexpr std::string_view kNegative = "#D55E00";

inline constexpr double kCanvasWidth = 960.0;
inline constexpr double kCanvasHeight = 720.0;

}  // namespace cowrite::plot
