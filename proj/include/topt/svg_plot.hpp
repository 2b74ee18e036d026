#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "topt/scene.hpp"

namespace topt::svg {

enum class LineStyle { line, steps };

struct Series {
  std::string label;
  std::string color = "#1f6fb2";
  LineStyle style = LineStyle::line;
  bool dashed = false;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct Marker {
  std::string label;
  std::string color = "#000000";
  double x = 0.0;
  double y = 0.0;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool equal_aspect = false;
  std::vector<double> hlines;  // dashed horizontal guides
  std::vector<scene::EllipseObstacle> obstacles;
  int width = 720;
  int height = 540;
};

// Minimal self-contained SVG line plot; obstacles are drawn as sampled
// outlines so any axis mapping works.
void write_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                const std::vector<Marker>& markers, const PlotOptions& options);

}  // namespace topt::svg
