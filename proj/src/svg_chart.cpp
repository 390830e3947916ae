#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <limits>
#include <optional>
#include <sstream>

#include "entrate/sweeps.hpp"

namespace entrate {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 160.0;
constexpr double kTop = 60.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  return buffer;
}

std::string tick_label(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4g", v);
  return buffer;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
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
        out += ch;
    }
  }
  return out;
}

std::string axis_label(const SweepSpec& spec) {
  const std::string user = " of user " + std::to_string(spec.user_index);
  switch (spec.axis) {
    case SweepAxis::eps_min_of_user:
      return "minimum rate" + user + " (ebit/s)";
    case SweepAxis::tau:
      return "window length tau (s)";
    case SweepAxis::num_users:
      return "number of users";
    case SweepAxis::distance_of_user:
      return "distance" + user + " (km)";
    case SweepAxis::memory_capacity:
      return "memory capacity (qubits)";
  }
  return "";
}

struct Series {
  std::string label;
  // Consecutive runs of points with values; gaps split the polyline.
  std::vector<std::vector<std::pair<double, double>>> segments;
};

struct Extent {
  double lo;
  double hi;

  void pad() {
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
      const double d = std::max(std::abs(hi) * 0.05, 1e-9);
      lo -= d;
      hi += d;
    } else {
      const double d = 0.05 * (hi - lo);
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

void render_svg(const SweepResult& result, std::ostream& out) {
  const SweepSpec& spec = result.spec;
  const std::vector<SweepRow>& rows = result.rows;
  const auto feasible = std::count_if(rows.begin(), rows.end(),
                                      [](const SweepRow& r) { return r.has_values(); });
  if (feasible < 2) {
    throw ChartError("chart needs at least two feasible sweep points; use the CSV output instead");
  }

  std::vector<Series> series;
  if (spec.chart == ChartKind::objective) {
    series.push_back({"objective", {}});
  } else {
    std::size_t users = 0;
    for (const SweepRow& r : rows) users = std::max(users, r.users);
    for (std::size_t j = 0; j < users; ++j) series.push_back({"user " + std::to_string(j), {}});
  }

  auto value_of = [&](const SweepRow& r, std::size_t s) -> std::optional<double> {
    if (!r.has_values()) return std::nullopt;
    if (spec.chart == ChartKind::objective) return r.objective;
    if (s >= r.rates.size()) return std::nullopt;
    return r.rates[s];
  };

  Extent xs{rows.front().axis_value, rows.back().axis_value};
  Extent ys{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t s = 0; s < series.size(); ++s) {
    bool open = false;
    for (const SweepRow& r : rows) {
      const auto v = value_of(r, s);
      if (!v) {
        open = false;
        continue;
      }
      if (!open) series[s].segments.emplace_back();
      open = true;
      series[s].segments.back().emplace_back(r.axis_value, *v);
      ys.lo = std::min(ys.lo, *v);
      ys.hi = std::max(ys.hi, *v);
    }
  }
  if (xs.hi <= xs.lo) {
    xs.lo -= 0.5;
    xs.hi += 0.5;
  }
  ys.pad();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xs.lo) / (xs.hi - xs.lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - ys.lo) / (ys.hi - ys.lo) * plot_h; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<metadata>" << escape_xml(result.metadata.dump()) << "</metadata>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Infeasible points: shade halfway to each neighbour.
  bool any_infeasible = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].has_values()) continue;
    any_infeasible = true;
    const double x = rows[i].axis_value;
    const double left = i > 0 ? 0.5 * (rows[i - 1].axis_value + x) : xs.lo;
    const double right = i + 1 < rows.size() ? 0.5 * (x + rows[i + 1].axis_value) : xs.hi;
    out << "<rect class=\"infeasible\" x=\"" << fixed(px(left)) << "\" y=\"" << fixed(kTop)
        << "\" width=\"" << fixed(px(right) - px(left)) << "\" height=\"" << fixed(plot_h)
        << "\" fill=\"#f4cccc\" fill-opacity=\"0.7\"/>\n";
  }

  // Axes and ticks.
  out << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\""
      << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(kTop + plot_h) << "\"/>\n"
      << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft)
      << "\" y2=\"" << fixed(kTop + plot_h) << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double fx = xs.lo + (xs.hi - xs.lo) * t / kTicks;
    const double fy = ys.lo + (ys.hi - ys.lo) * t / kTicks;
    out << "<line x1=\"" << fixed(px(fx)) << "\" y1=\"" << fixed(kTop + plot_h) << "\" x2=\""
        << fixed(px(fx)) << "\" y2=\"" << fixed(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fixed(px(fx)) << "\" y=\"" << fixed(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n"
        << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(py(fy)) << "\" x2=\""
        << fixed(kLeft) << "\" y2=\"" << fixed(py(fy)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py(fy) + 4)
        << "\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
  }
  out << "</g>\n";

  const std::string y_label = spec.chart == ChartKind::objective ? "objective" : "rate (ebit/s)";
  out << "<g font-family=\"sans-serif\" font-size=\"13\">\n"
      << "<text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape_xml(axis_label(spec)) << "</text>\n"
      << "<text x=\"20\" y=\"" << fixed(kTop + plot_h / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 20 " << fixed(kTop + plot_h / 2) << ")\">" << y_label
      << "</text>\n"
      << "<text x=\"" << fixed(kLeft) << "\" y=\"24\" font-size=\"15\">"
      << escape_xml(spec.name.empty() ? std::string("sweep") : spec.name) << "</text>\n";

  double obj_lo = std::numeric_limits<double>::infinity();
  double obj_hi = -obj_lo;
  for (const SweepRow& r : rows) {
    if (!r.has_values()) continue;
    obj_lo = std::min(obj_lo, r.objective);
    obj_hi = std::max(obj_hi, r.objective);
  }
  const bool flat = obj_hi - obj_lo <= 1e-9 * std::max(1.0, std::abs(obj_hi));
  out << "<text class=\"objective-note\" x=\"" << fixed(kLeft) << "\" y=\"44\">"
      << (flat ? "objective constant at " + tick_label(obj_hi)
               : "objective from " + tick_label(obj_lo) + " to " + tick_label(obj_hi))
      << "</text>\n</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    for (const auto& segment : series[s].segments) {
      out << "<polyline class=\"series\" data-series=\"" << escape_xml(series[s].label)
          << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
      for (std::size_t k = 0; k < segment.size(); ++k) {
        out << (k ? " " : "") << fixed(px(segment[k].first)) << ',' << fixed(py(segment[k].second));
      }
      out << "\"/>\n";
      for (const auto& [x, y] : segment) {
        out << "<circle cx=\"" << fixed(px(x)) << "\" cy=\"" << fixed(py(y)) << "\" r=\"2.5\" fill=\""
            << colour << "\"/>\n";
      }
    }
  }

  // Legend.
  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = kTop + 10;
  for (std::size_t s = 0; s < series.size(); ++s, ly += 20) {
    const char* colour = kPalette[s % std::size(kPalette)];
    out << "<line x1=\"" << fixed(kWidth - kRight + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\""
        << fixed(kWidth - kRight + 40) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << colour
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fixed(kWidth - kRight + 46) << "\" y=\"" << fixed(ly + 4) << "\">"
        << escape_xml(series[s].label) << "</text>\n";
  }
  if (any_infeasible) {
    out << "<rect x=\"" << fixed(kWidth - kRight + 15) << "\" y=\"" << fixed(ly - 6)
        << "\" width=\"25\" height=\"12\" fill=\"#f4cccc\"/>\n"
        << "<text x=\"" << fixed(kWidth - kRight + 46) << "\" y=\"" << fixed(ly + 4)
        << "\">infeasible</text>\n";
  }
  out << "</g>\n</svg>\n";
}

void render_svg(const SweepResult& result, const std::string& file) {
  std::ostringstream buffer;
  render_svg(result, buffer);  // throws before the file is touched
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(file + ": cannot open for writing");
  out << buffer.str();
  if (!out) throw std::runtime_error(file + ": write failed");
}

}  // namespace entrate
