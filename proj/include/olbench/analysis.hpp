// Copyright 2026 The olbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/core.hpp"
#include "olbench/dataio.hpp"

namespace olbench
{

inline constexpr double kHeadingBand = 0.2;
inline constexpr double kCurvatureBand = 0.02;
inline constexpr std::size_t kDefaultBins = 100;

struct Histogram
{
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  friend bool operator==(const Histogram &, const Histogram &) = default;

  /// Sum of counts for bins lying entirely inside [lo, hi].
  std::size_t count_within(double lo, double hi) const
  {
    std::size_t c = 0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (edges[b] >= lo && edges[b + 1] <= hi) {
        c += counts[b];
      }
    }
    return c;
  }
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
  if (bins == 0 || !(lo < hi)) {
    throw std::invalid_argument("uniform_edges: need bins > 0 and lo < hi");
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

/// Bins are [e_b, e_{b+1}); the last bin also takes its upper edge. Values outside are dropped.
inline Histogram make_histogram(const std::vector<double> & values, std::vector<double> edges)
{
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::invalid_argument("make_histogram: edges must be strictly increasing");
  }
  Histogram h;
  h.edges = std::move(edges);
  h.counts.assign(h.edges.size() - 1, 0);
  for (double v : values) {
    if (v < h.edges.front() || v > h.edges.back()) {
      continue;
    }
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    auto b = static_cast<std::size_t>(it - h.edges.begin());
    b = b == 0 ? 0 : b - 1;
    b = std::min(b, h.counts.size() - 1);
    ++h.counts[b];
    ++h.total;
  }
  return h;
}

/// Uniform bins over the observed range (widened to cover the band) with +/-band inserted as edges.
inline std::vector<double> band_aligned_edges(const std::vector<double> & values, double band, std::size_t bins)
{
  double lo = -band;
  double hi = band;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto edges = uniform_edges(lo, hi, bins);
  const double tol = 1e-12 * std::max(1.0, hi - lo);
  std::erase_if(edges, [&](double e) {
    return e != lo && e != hi && (std::abs(e - band) < tol || std::abs(e + band) < tol);
  });
  for (double e : {-band, band}) {
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) {
      edges.push_back(e);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

inline double band_fraction(const std::vector<double> & values, double band)
{
  if (values.empty()) {
    return 0.0;
  }
  const auto inside = std::count_if(values.begin(), values.end(), [&](double v) { return std::abs(v) <= band; });
  return static_cast<double>(inside) / static_cast<double>(values.size());
}

struct DistributionReport
{
  std::vector<std::array<double, 2>> scatter;
  std::vector<double> heading_values;
  std::vector<double> curvature_values;
  Histogram heading;
  Histogram curvature;
  double heading_band_fraction = 0.0;
  double curvature_band_fraction = 0.0;
};

/// Future path used for curvature statistics: the current pose followed by the GT future.
inline Trajectory path_from_origin(const Trajectory & future)
{
  Trajectory path;
  path.period = future.period;
  path.waypoints.reserve(future.size() + 1);
  path.waypoints.push_back({});
  path.waypoints.insert(path.waypoints.end(), future.waypoints.begin(), future.waypoints.end());
  return path;
}

/// Heading statistic is the final-waypoint theta per sample; curvature pools every
/// interior vertex of each sample's future path.
inline DistributionReport distribution_report(const Dataset & ds, std::size_t bins = kDefaultBins)
{
  if (ds.samples.empty()) {
    throw std::invalid_argument("distribution_report: dataset is empty");
  }
  DistributionReport r;
  for (const auto & s : ds.samples) {
    for (const auto & p : s.gt_future.waypoints) {
      r.scatter.push_back({p.x, p.y});
    }
    r.heading_values.push_back(heading_angles(s.gt_future).back());
    const auto curv = curvature_angles(path_from_origin(s.gt_future));
    r.curvature_values.insert(r.curvature_values.end(), curv.begin(), curv.end());
  }
  r.heading = make_histogram(r.heading_values, band_aligned_edges(r.heading_values, kHeadingBand, bins));
  r.curvature = make_histogram(r.curvature_values, band_aligned_edges(r.curvature_values, kCurvatureBand, bins));
  r.heading_band_fraction = band_fraction(r.heading_values, kHeadingBand);
  r.curvature_band_fraction = band_fraction(r.curvature_values, kCurvatureBand);
  return r;
}

inline nlohmann::ordered_json to_json(const DistributionReport & r)
{
  nlohmann::ordered_json j;
  j["trajectory_points"] = r.scatter.size();
  j["heading"] = {{"values", r.heading_values.size()},
                  {"band_rad", kHeadingBand},
                  {"band_fraction", r.heading_band_fraction}};
  j["curvature"] = {{"values", r.curvature_values.size()},
                    {"band_rad", kCurvatureBand},
                    {"band_fraction", r.curvature_band_fraction}};
  return j;
}

namespace detail
{

inline std::string fmt_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path & p)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + p.string() + "'");
  }
  return out;
}

inline void write_histogram_csv(const Histogram & h, const std::filesystem::path & p)
{
  auto out = open_out(p);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << fmt_double(h.edges[b]) << ',' << fmt_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
}

inline void write_histogram_svg(const Histogram & h, const std::string & title, const std::filesystem::path & p)
{
  constexpr double width = 640.0;
  constexpr double height = 360.0;
  constexpr double pad = 40.0;
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  std::size_t peak = 1;
  for (auto c : h.counts) {
    peak = std::max(peak, c);
  }
  auto out = open_out(p);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", width, height);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%.0f\" y=\"20\" font-size=\"14\">%s</text>\n", pad, title.c_str());
  out << buf;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double x0 = pad + (width - 2 * pad) * (h.edges[b] - lo) / (hi - lo);
    const double x1 = pad + (width - 2 * pad) * (h.edges[b + 1] - lo) / (hi - lo);
    const double bar = (height - 2 * pad) * static_cast<double>(h.counts[b]) / static_cast<double>(peak);
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"steelblue\"/>\n", x0,
                  height - pad - bar, std::max(x1 - x0, 0.0), bar);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\">%.4g</text>"
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                pad, height - 10, lo, width - pad, height - 10, hi);
  out << buf << "</svg>\n";
}

inline void write_scatter_svg(const std::vector<std::array<double, 2>> & pts, const std::filesystem::path & p)
{
  constexpr double size = 480.0;
  constexpr double pad = 20.0;
  double span = 1.0;
  for (const auto & q : pts) {
    span = std::max({span, std::abs(q[0]), std::abs(q[1])});
  }
  auto out = open_out(p);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                size, size);
  out << buf;
  const double scale = (size - 2 * pad) / (2 * span);
  // Forward (x) points up, left (y) points left.
  for (const auto & q : pts) {
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1\" fill=\"black\"/>\n",
                  size / 2 - q[1] * scale, size / 2 - q[0] * scale);
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace detail

/// Writes scatter.csv (x,y), heading_hist.csv and curvature_hist.csv (bin_lo,bin_hi,count)
/// plus SVG renderings of each.
inline void export_figures(const DistributionReport & r, const std::string & out_dir)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + out_dir + "': " + ec.message());
  }
  const fs::path dir(out_dir);
  {
    auto out = detail::open_out(dir / "scatter.csv");
    out << "x,y\n";
    for (const auto & q : r.scatter) {
      out << detail::fmt_double(q[0]) << ',' << detail::fmt_double(q[1]) << '\n';
    }
  }
  detail::write_histogram_csv(r.heading, dir / "heading_hist.csv");
  detail::write_histogram_csv(r.curvature, dir / "curvature_hist.csv");
  detail::write_scatter_svg(r.scatter, dir / "scatter.svg");
  detail::write_histogram_svg(r.heading, "heading angle (rad) at 3 s", dir / "heading_hist.svg");
  detail::write_histogram_svg(r.curvature, "curvature angle (rad)", dir / "curvature_hist.svg");
}

}  // namespace olbench
