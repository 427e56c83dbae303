#include "posedist/mollweide.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace posedist {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kWidth = 720.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 20.0;
constexpr double kTop = 40.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string hue_color(double psi) {
  // HSV with s = v = 0.85.
  double h = psi / (2.0 * kPi) * 6.0;
  int i = static_cast<int>(std::floor(h)) % 6;
  double f = h - std::floor(h);
  double v = 0.85, p = v * 0.15, q = v * (1.0 - 0.85 * f), t = v * (1.0 - 0.85 * (1.0 - f));
  double r, g, b;
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(r * 255)),
                static_cast<int>(std::lround(g * 255)), static_cast<int>(std::lround(b * 255)));
  return buf;
}

Vec2 to_canvas(const Vec2& m) {
  const double sx = (kWidth - 2 * kMargin) / (4.0 * std::sqrt(2.0));
  const double sy = (kHeight - kTop - kMargin) / (2.0 * std::sqrt(2.0));
  return {kWidth / 2 + m.x() * sx, kTop + (kHeight - kTop - kMargin) / 2 - m.y() * sy};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '-' && !out.empty() && out.back() == '-') out += ' ', out += c;
    else out += c;
  }
  return out;
}

}  // namespace

Vec2 mollweide_xy(const Rotation& r) {
  Vec3 d = r * Vec3::UnitZ();
  double lon = std::atan2(d.y(), d.x());
  double lat = std::asin(std::clamp(d.z(), -1.0, 1.0));
  double t = lat;
  if (std::abs(std::abs(lat) - kPi / 2) > 1e-12) {
    for (int i = 0; i < 50; ++i) {
      double f = 2 * t + std::sin(2 * t) - kPi * std::sin(lat);
      double df = 2 + 2 * std::cos(2 * t);
      if (df < 1e-15) break;
      double step = f / df;
      t -= step;
      if (std::abs(step) < 1e-14) break;
    }
  }
  return {2.0 * std::sqrt(2.0) / kPi * lon * std::cos(t), std::sqrt(2.0) * std::sin(t)};
}

double zyz_psi(const Rotation& r) {
  Mat3 m = r.matrix();
  double psi = std::atan2(m(2, 1), -m(2, 0));
  if (std::abs(m(2, 2)) > 1.0 - 1e-12) psi = std::atan2(m(1, 0), m(0, 0));
  return psi < 0 ? psi + 2 * kPi : psi;
}

std::string mollweide_svg(const MollweidePlot& plot) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  if (!plot.provenance.empty()) os << "<!-- " << escape(plot.provenance) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  Vec2 c = to_canvas({0, 0});
  Vec2 e = to_canvas({2 * std::sqrt(2.0), std::sqrt(2.0)});
  os << "<ellipse cx=\"" << fmt(c.x()) << "\" cy=\"" << fmt(c.y()) << "\" rx=\"" << fmt(e.x() - c.x())
     << "\" ry=\"" << fmt(c.y() - e.y()) << "\" fill=\"#f4f4f4\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape(plot.title)
     << " (" << plot.points.size() << " rotations)</text>\n";

  double wmin = 0.0, wmax = 0.0;
  if (!plot.weights.empty()) {
    wmin = *std::min_element(plot.weights.begin(), plot.weights.end());
    wmax = *std::max_element(plot.weights.begin(), plot.weights.end());
  }
  const double base_r = plot.points.size() > 2000 ? 1.2 : 4.0;
  os << "<g stroke=\"none\" fill-opacity=\"0.8\">\n";
  for (std::size_t i = 0; i < plot.points.size(); ++i) {
    double w = 1.0;
    if (!plot.weights.empty() && wmax > wmin) w = 0.2 + 0.8 * (plot.weights[i] - wmin) / (wmax - wmin);
    Vec2 p = to_canvas(mollweide_xy(plot.points[i]));
    os << "<circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(p.y()) << "\" r=\"" << fmt(base_r * std::sqrt(w))
       << "\" fill=\"" << hue_color(zyz_psi(plot.points[i])) << "\"/>\n";
  }
  os << "</g>\n<g fill=\"none\" stroke=\"black\" stroke-width=\"1\">\n";
  for (const auto& g : plot.ground_truth) {
    Vec2 p = to_canvas(mollweide_xy(g));
    os << "<circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(p.y()) << "\" r=\"7\"/>\n";
  }
  os << "</g>\n";
  if (!plot.warning.empty()) {
    os << "<rect x=\"0\" y=\"" << kHeight / 2 - 18 << "\" width=\"" << kWidth
       << "\" height=\"36\" fill=\"#c0392b\" fill-opacity=\"0.85\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2 + 6
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\" fill=\"white\">"
       << escape(plot.warning) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace posedist
