#include "topt/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace topt::svg {

namespace {

constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 48;
constexpr int kEllipseSamples = 128;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double margin = 0.06 * (hi - lo);
    lo -= margin;
    hi += margin;
  }
};

std::vector<std::pair<double, double>> ellipse_outline(const scene::EllipseObstacle& e) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(kEllipseSamples + 1);
  const double c = std::cos(e.theta_e);
  const double s = std::sin(e.theta_e);
  for (int i = 0; i <= kEllipseSamples; ++i) {
    const double a = 2.0 * M_PI * i / kEllipseSamples;
    const double ex = e.a_e * std::cos(a);
    const double ey = e.b_e * std::sin(a);
    pts.emplace_back(e.x_e + c * ex - s * ey, e.y_e + s * ex + c * ey);
  }
  return pts;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                const std::vector<Marker>& markers, const PlotOptions& options) {
  Range rx, ry;
  for (const Series& s : series) {
    for (double v : s.xs) rx.include(v);
    for (double v : s.ys) ry.include(v);
  }
  for (const Marker& m : markers) {
    rx.include(m.x);
    ry.include(m.y);
  }
  std::vector<std::vector<std::pair<double, double>>> outlines;
  for (const scene::EllipseObstacle& e : options.obstacles) {
    outlines.push_back(ellipse_outline(e));
    for (const auto& [px, py] : outlines.back()) {
      rx.include(px);
      ry.include(py);
    }
  }
  for (double h : options.hlines) ry.include(h);
  rx.pad();
  ry.pad();

  const double plot_w = options.width - kMarginLeft - kMarginRight;
  const double plot_h = options.height - kMarginTop - kMarginBottom;
  double sx = plot_w / (rx.hi - rx.lo);
  double sy = plot_h / (ry.hi - ry.lo);
  if (options.equal_aspect) {
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (rx.lo + rx.hi);
    const double cy = 0.5 * (ry.lo + ry.hi);
    rx.lo = cx - 0.5 * plot_w / s;
    rx.hi = cx + 0.5 * plot_w / s;
    ry.lo = cy - 0.5 * plot_h / s;
    ry.hi = cy + 0.5 * plot_h / s;
    sx = sy = s;
  }
  const auto mx = [&](double x) { return kMarginLeft + (x - rx.lo) * sx; };
  const auto my = [&](double y) { return kMarginTop + (ry.hi - y) * sy; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width
      << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << " "
      << options.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (!options.title.empty()) {
    out << "<text x=\"" << options.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << options.title << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << options.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << options.x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << kMarginTop + plot_h / 2 << ")\">"
      << options.y_label << "</text>\n";

  // Axis extent labels.
  out << "<text x=\"" << kMarginLeft << "\" y=\"" << options.height - 30
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(rx.lo) << "</text>\n";
  out << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << options.height - 30
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt(rx.hi) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << my(ry.hi) + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt(ry.hi) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << my(ry.lo)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt(ry.lo) << "</text>\n";

  for (const auto& outline : outlines) {
    out << "<polygon fill=\"#f3c6c6\" stroke=\"#b03030\" stroke-width=\"1\" points=\"";
    for (const auto& [px, py] : outline) out << fmt(mx(px)) << ',' << fmt(my(py)) << ' ';
    out << "\"/>\n";
  }
  for (double h : options.hlines) {
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(my(h)) << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << fmt(my(h))
        << "\" stroke=\"#777\" stroke-dasharray=\"6 4\"/>\n";
  }

  int legend_y = kMarginTop + 14;
  for (const Series& s : series) {
    if (s.xs.size() != s.ys.size() || s.xs.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
    if (s.dashed) out << " stroke-dasharray=\"5 4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (s.style == LineStyle::steps && i > 0) {
        out << fmt(mx(s.xs[i])) << ',' << fmt(my(s.ys[i - 1])) << ' ';
      }
      out << fmt(mx(s.xs[i])) << ',' << fmt(my(s.ys[i])) << ' ';
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      out << "<line x1=\"" << kMarginLeft + 8 << "\" y1=\"" << legend_y - 4 << "\" x2=\""
          << kMarginLeft + 30 << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color
          << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << kMarginLeft + 36 << "\" y=\"" << legend_y
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
      legend_y += 16;
    }
  }
  for (const Marker& m : markers) {
    out << "<circle cx=\"" << fmt(mx(m.x)) << "\" cy=\"" << fmt(my(m.y))
        << "\" r=\"4\" fill=\"" << m.color << "\"/>\n";
    if (!m.label.empty()) {
      out << "<text x=\"" << fmt(mx(m.x) + 6) << "\" y=\"" << fmt(my(m.y) - 6)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << m.label << "</text>\n";
    }
  }
  out << "</svg>\n";
  out.close();
  if (!out) throw std::runtime_error("failed while writing " + path.string());
}

}  // namespace topt::svg
