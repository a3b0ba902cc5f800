#include "cowrite/svg.hpp"

#include <cmath>
#include <cstdio>

#include "cowrite/error.hpp"

namespace cowrite::plot {

std::string SvgWriter::num(double v) {
  if (!std::isfinite(v)) throw NonFiniteInput();
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string SvgWriter::escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

SvgWriter::SvgWriter(double width, double height, std::string_view comment) {
  out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) + "\" height=\"" +
          num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
          "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  if (!comment.empty()) {
    std::string c(comment);
    for (std::size_t p; (p = c.find("--")) != std::string::npos;) c.replace(p, 2, "- -");
    out_ += "<!-- " + c + " -->\n";
  }
  rect(0, 0, width, height, "#FFFFFF");
}

void SvgWriter::rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke,
                     double stroke_width) {
  out_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
          "\" fill=\"" + std::string(fill) + "\"";
  if (stroke != "none") out_ += " stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(stroke_width) + "\"";
  out_ += "/>\n";
}

void SvgWriter::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
                     std::string_view dash) {
  out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
          "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"";
  if (!dash.empty()) out_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
  out_ += "/>\n";
}

void SvgWriter::polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width) {
  out_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) +
          "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out_ += ' ';
    out_ += num(pts[i].first) + "," + num(pts[i].second);
  }
  out_ += "\"/>\n";
}

void SvgWriter::circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke) {
  out_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + std::string(fill) +
          "\"";
  if (stroke != "none") out_ += " stroke=\"" + std::string(stroke) + "\"";
  out_ += "/>\n";
}

void SvgWriter::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                     std::string_view fill, double rotate) {
  out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) + "\" text-anchor=\"" +
          std::string(anchor) + "\" fill=\"" + std::string(fill) + "\"";
  if (rotate != 0.0) out_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
  out_ += ">" + escape(content) + "</text>\n";
}

void SvgWriter::open_group(double dx, double dy) {
  out_ += "<g transform=\"translate(" + num(dx) + " " + num(dy) + ")\">\n";
  ++depth_;
}

void SvgWriter::close_group() {
  if (depth_ == 0) throw Error("unbalanced SVG group");
  out_ += "</g>\n";
  --depth_;
}

std::string SvgWriter::finish() {
  while (depth_ > 0) close_group();
  out_ += "</svg>\n";
  return std::move(out_);
}

}  // namespace cowrite::plot
