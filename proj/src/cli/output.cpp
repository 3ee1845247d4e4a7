#include "ctb/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>


namespace ctb::cli {
namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kWidth = 640.0, kHeight = 480.0, kMargin = 60.0;

std::string svg_open(const std::string& title, const std::string& digest) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<metadata>config-digest=" << digest << "</metadata>\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  return o.str();
}

std::string fmt_coord(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, std::round(v * 100.0) / 100.0, std::chars_format::fixed, 2);
  return std::string(buf, r.ptr);
}

std::string tick_label(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, r.ptr);
}

}  // namespace

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("row width does not match the table header");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string to_csv(const Table& t, const OutputHeader& h) {
  std::string out = "# ctb " + h.command + " config-digest=" + h.digest + "\n";
  if (h.timestamp) out += "# generated " + utc_now() + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i].name;
    if (!t.columns[i].unit.empty()) out += " [" + t.columns[i].unit + "]";
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += cell_text(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& t, const OutputHeader& h) {
  nlohmann::ordered_json j;
  j["command"] = h.command;
  j["config_digest"] = h.digest;
  if (h.timestamp) j["generated"] = utc_now();
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const Column& c : t.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const Cell& c : row) {
      if (const double* d = std::get_if<double>(&c)) {
        if (std::isfinite(*d)) r.push_back(*d);
        else r.push_back(format_double(*d));
      } else if (const long long* i = std::get_if<long long>(&c)) {
        r.push_back(*i);
      } else {
        r.push_back(std::get<std::string>(c));
      }
    }
    rows.push_back(std::move(r));
  }
  return j.dump(1) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << content;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::polyline(std::span<const double> x, std::span<const double> y, const std::string& color,
                       double opacity) {
  series_.push_back({{x.begin(), x.end()}, {y.begin(), y.end()}, color, opacity, false});
}

void SvgPlot::markers(std::span<const double> x, std::span<const double> y, const std::string& color) {
  series_.push_back({{x.begin(), x.end()}, {y.begin(), y.end()}, color, 1.0, true});
}

std::string SvgPlot::render(const std::string& digest) const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series_) {
    for (double v : s.x)
      if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y)
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
  auto X = [&](double v) { return kMargin + (v - x0) / (x1 - x0) * pw; };
  auto Y = [&](double v) { return kHeight - kMargin - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << svg_open(title_, digest);
  o << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << fmt_coord(X(fx)) << "\" y=\"" << kHeight - kMargin + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fx) << "</text>\n";
    o << "<text x=\"" << kMargin - 6 << "\" y=\"" << fmt_coord(Y(fy) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fy) << "</text>\n";
  }
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 14
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(x_label_) << "</text>\n";
  o << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(y_label_) << "</text>\n";

  for (const Series& s : series_) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          o << "<circle cx=\"" << fmt_coord(X(s.x[i])) << "\" cy=\"" << fmt_coord(Y(s.y[i])) << "\" r=\"4\" fill=\""
            << s.color << "\"/>\n";
      continue;
    }
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-opacity=\"" << s.opacity
          << "\" stroke-width=\"1.2\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt_coord(X(s.x[i])) + "," + fmt_coord(Y(s.y[i]));
    }
    flush();
  }
  o << "</svg>\n";
  return o.str();
}

SpherePlot::SpherePlot(std::string title, double elevation, double azimuth)
    : title_(std::move(title)), elevation_(elevation), azimuth_(azimuth) {}

void SpherePlot::curve(std::span<const std::array<double, 3>> points, const std::string& color) {
  for (const auto& p : points) radius_ = std::max(radius_, std::hypot(p[0], p[1], p[2]));
  curves_.push_back({{points.begin(), points.end()}, color});
}

std::array<double, 3> SpherePlot::view(const std::array<double, 3>& p) const {
  const double ca = std::cos(azimuth_), sa = std::sin(azimuth_);
  const double ce = std::cos(elevation_), se = std::sin(elevation_);
  const double x = ca * p[0] + sa * p[1];
  const double y = -sa * p[0] + ca * p[1];
  // Screen (right, up) and depth towards the viewer.
  return {y, ce * p[2] - se * x, ce * x + se * p[2]};
}

std::string SpherePlot::render(const std::string& digest) const {
  const double R = radius_ > 0.0 ? radius_ : 1.0;
  const double cx = kWidth / 2, cy = kHeight / 2 + 10, scale = (kHeight / 2 - kMargin) / R;
  std::ostringstream o;
  o << svg_open(title_, digest);
  o << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << fmt_coord(R * scale)
    << "\" fill=\"none\" stroke=\"gray\"/>\n";
  for (const Curve& c : curves_) {
    std::string pts;
    bool front = true;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-opacity=\"" << (front ? 1.0 : 0.25)
          << "\" stroke-width=\"1.2\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (const auto& p : c.points) {
      const auto v = view(p);
      const bool f = v[2] >= 0.0;
      const std::string xy = fmt_coord(cx + scale * v[0]) + "," + fmt_coord(cy - scale * v[1]);
      if (f != front && !pts.empty()) {
        pts += ' ' + xy;
        flush();
      }
      front = f;
      if (!pts.empty()) pts += ' ';
      pts += xy;
    }
    flush();
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ctb::cli
