#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ctb::cli {

struct Column {
  std::string name;
  std::string unit;
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

// Shortest text that round-trips, at most 17 significant digits.
std::string format_double(double v);

struct OutputHeader {
  std::string command;
  std::string digest;
  bool timestamp = true;
};

// "name [unit]" header row after '#' comment lines with the digest and,
// optionally, the generation time.
std::string to_csv(const Table& t, const OutputHeader& h);
std::string to_json(const Table& t, const OutputHeader& h);

void write_file(const std::string& path, const std::string& content);

// Minimal SVG line plot.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void polyline(std::span<const double> x, std::span<const double> y, const std::string& color, double opacity = 1.0);
  void markers(std::span<const double> x, std::span<const double> y, const std::string& color);
  std::string render(const std::string& digest) const;

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
    double opacity;
    bool markers;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

// Orthographic view of curves on a sphere; the far hemisphere is dimmed.
class SpherePlot {
 public:
  explicit SpherePlot(std::string title, double elevation = 0.45, double azimuth = 0.6);

  void curve(std::span<const std::array<double, 3>> points, const std::string& color);
  std::string render(const std::string& digest) const;

 private:
  std::array<double, 3> view(const std::array<double, 3>& p) const;
  struct Curve {
    std::vector<std::array<double, 3>> points;
    std::string color;
  };
  std::string title_;
  double elevation_, azimuth_;
  double radius_ = 0.0;
  std::vector<Curve> curves_;
};

}  // namespace ctb::cli
