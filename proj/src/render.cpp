#include "leashnav/render.hpp"

#include <algorithm>
#include <cmath>

#include "leashnav/io.hpp"

namespace leashnav {
namespace {

struct Bounds {
  double min_x = 0, min_y = 0, max_x = 1, max_y = 1;
  void grow(double x, double y) {
    min_x = std::min(min_x, x);
    min_y = std::min(min_y, y);
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
};

std::string fmt(double v) { return io::format_double(std::round(v * 100.0) / 100.0); }

}  // namespace

std::string render_svg(const ObstacleSet& obstacles, const SimLog* log,
                       std::span<const Configuration> waypoints, const RenderSpec& spec) {
  if (!(spec.pixels_per_meter > 0.0)) throw InvalidInput("render: scale must be positive");

  Bounds b;
  bool seeded = false;
  auto seed = [&](double x, double y) {
    if (!seeded) {
      b.min_x = b.max_x = x;
      b.min_y = b.max_y = y;
      seeded = true;
    } else {
      b.grow(x, y);
    }
  };
  for (const Circle& c : obstacles.circles) {
    seed(c.center.x - c.radius, c.center.y - c.radius);
    b.grow(c.center.x + c.radius, c.center.y + c.radius);
  }
  if (log) {
    for (const SimRow& r : log->rows) {
      seed(r.q.x, r.q.y);
      b.grow(r.human.x, r.human.y);
    }
  }
  for (const Configuration& w : waypoints) seed(w.x, w.y);
  if (!seeded) seed(0.0, 0.0);

  b.min_x -= spec.padding;
  b.min_y -= spec.padding;
  b.max_x += spec.padding;
  b.max_y += spec.padding;

  const double s = spec.pixels_per_meter;
  const double width = (b.max_x - b.min_x) * s;
  const double height = (b.max_y - b.min_y) * s;
  auto px = [&](double x) { return (x - b.min_x) * s; };
  auto py = [&](double y) { return (b.max_y - y) * s; };  // SVG y points down

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
         fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (spec.show_obstacles) {
    for (const Circle& c : obstacles.circles) {
      svg += "<circle cx=\"" + fmt(px(c.center.x)) + "\" cy=\"" + fmt(py(c.center.y)) +
             "\" r=\"" + fmt(c.radius * s) + "\" fill=\"#555555\"/>\n";
    }
  }

  if (spec.show_waypoints && !waypoints.empty()) {
    std::string pts;
    for (const Configuration& w : waypoints) {
      pts += fmt(px(w.x)) + "," + fmt(py(w.y)) + " ";
    }
    svg += "<polyline points=\"" + pts +
           "\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.5\"/>\n";
    for (const Configuration& w : waypoints) {
      svg += "<circle cx=\"" + fmt(px(w.x)) + "\" cy=\"" + fmt(py(w.y)) +
             "\" r=\"3\" fill=\"#2ca02c\"/>\n";
    }
  }

  if (log && !log->rows.empty()) {
    if (spec.show_human_path) {
      std::string pts;
      for (const SimRow& r : log->rows) pts += fmt(px(r.human.x)) + "," + fmt(py(r.human.y)) + " ";
      svg += "<polyline points=\"" + pts +
             "\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>\n";
    }
    if (spec.show_robot_path) {
      // Split the robot path into runs of constant mode so slack segments can
      // carry a distinct stroke.
      std::size_t i = 0;
      while (i + 1 < log->rows.size()) {
        const int mode = log->rows[i + 1].mode;
        std::string pts = fmt(px(log->rows[i].q.x)) + "," + fmt(py(log->rows[i].q.y)) + " ";
        std::size_t j = i + 1;
        while (j < log->rows.size() && log->rows[j].mode == mode) {
          pts += fmt(px(log->rows[j].q.x)) + "," + fmt(py(log->rows[j].q.y)) + " ";
          ++j;
        }
        const bool slack = mode == 0;
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
               (slack && spec.show_slack ? std::string("#d62728") : std::string("#1f77b4")) +
               "\" stroke-width=\"2\"" +
               (slack && spec.show_slack ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
        i = j - 1;
        if (j >= log->rows.size()) break;
      }
    }
    const SimRow& first = log->rows.front();
    const SimRow& last = log->rows.back();
    svg += "<circle cx=\"" + fmt(px(first.q.x)) + "\" cy=\"" + fmt(py(first.q.y)) +
           "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    svg += "<circle cx=\"" + fmt(px(last.q.x)) + "\" cy=\"" + fmt(py(last.q.y)) +
           "\" r=\"4\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace leashnav
