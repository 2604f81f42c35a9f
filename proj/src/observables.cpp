#include "mlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mlab/errors.hpp"
#include "mlab/io.hpp"

namespace mlab {

int TrajectoryRecord::find(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<int>(j);
  return -1;
}

const std::vector<double>& TrajectoryRecord::at(const std::string& name) const {
  const int j = find(name);
  if (j < 0) throw misuse_error("record: no series named '" + name + "'");
  return series[j];
}

std::vector<double>& TrajectoryRecord::add_series(const std::string& name) {
  if (find(name) >= 0) throw misuse_error("record: duplicate series '" + name + "'");
  names.push_back(name);
  series.emplace_back();
  return series.back();
}

namespace {

// Indices pairing a's times with b's, 1e-9 tolerance, both ascending.
std::vector<std::pair<int, int>> common_times(const TrajectoryRecord& a,
                                              const TrajectoryRecord& b) {
  std::vector<std::pair<int, int>> out;
  std::size_t jb = 0;
  for (std::size_t ja = 0; ja < a.times.size(); ++ja) {
    while (jb < b.times.size() && b.times[jb] < a.times[ja] - 1e-9) ++jb;
    if (jb < b.times.size() && std::abs(b.times[jb] - a.times[ja]) <= 1e-9)
      out.emplace_back(static_cast<int>(ja), static_cast<int>(jb));
  }
  return out;
}

}  // namespace

DivergenceReport divergence(const TrajectoryRecord& a, const TrajectoryRecord& b,
                            const std::string& series, double threshold, double scale_floor) {
  const auto& sa = a.at(series);
  const auto& sb = b.at(series);
  const auto pairs = common_times(a, b);
  if (pairs.size() < 2)
    throw misuse_error("divergence: records share fewer than two sample times");

  DivergenceReport rep;
  rep.first_exceed = std::numeric_limits<double>::quiet_NaN();
  rep.n_compared = static_cast<int>(pairs.size());
  for (const auto& [ia, ib] : pairs) {
    const double va = sa[ia], vb = sb[ib];
    const double scale = std::max(scale_floor, 0.5 * (std::abs(va) + std::abs(vb)));
    const double dev = scale > 0 ? std::abs(va - vb) / scale : 0.0;
    if (dev > rep.max_rel_dev) {
      rep.max_rel_dev = dev;
      rep.t_at_max = a.times[ia];
    }
    if (!rep.crossed && dev > threshold) {
      rep.crossed = true;
      rep.first_exceed = a.times[ia];
    }
  }
  return rep;
}

SaturationReport saturation_check(const TrajectoryRecord& r, const std::string& series,
                                  double window_fraction, double rel_tol, double scale_floor) {
  if (!(window_fraction > 0) || window_fraction > 1)
    throw misuse_error("saturation_check: window_fraction must be in (0, 1]");
  const auto& s = r.at(series);
  if (r.times.size() < 3) throw misuse_error("saturation_check: need at least 3 samples");

  const double t0 = r.times.front(), t1 = r.times.back();
  const double w0 = t1 - window_fraction * (t1 - t0);
  SaturationReport rep;
  rep.window_start = w0;

  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  double mean_abs = 0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.times[i] < w0 - 1e-12) continue;
    const double t = r.times[i], y = s[i];
    sw += 1;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    mean_abs += std::abs(y);
    ++rep.n_points;
  }
  if (rep.n_points < 3) throw misuse_error("saturation_check: window holds fewer than 3 samples");
  const double det = sw * stt - st * st;
  if (det <= 0) throw numeric_error("saturation_check: degenerate time window");
  rep.slope = (sw * sty - st * sy) / det;
  mean_abs /= sw;
  const double scale = std::max(scale_floor, mean_abs);
  const double span = t1 - w0;
  rep.rel_change = scale > 0 ? std::abs(rep.slope) * span / scale : 0.0;
  rep.saturated = rep.rel_change <= rel_tol;
  return rep;
}

void record_to_csv(const TrajectoryRecord& r, const std::string& path) {
  std::vector<std::string> comments;
  for (const auto& [k, v] : r.meta) comments.push_back(k + " = " + v);
  std::vector<std::string> names = {"t"};
  std::vector<std::vector<double>> cols = {r.times};
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    names.push_back(r.names[j]);
    cols.push_back(r.series[j]);
  }
  write_csv(path, comments, names, cols);
}

TrajectoryRecord record_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("record: cannot open: " + path);
  TrajectoryRecord r;
  std::string line;
  bool have_header = false;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos)
        r.meta[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!have_header) {
      bool first = true;
      while (std::getline(ss, cell, ',')) {
        if (first && cell != "t")
          throw io_error("record: first column must be 't', got '" + cell + "'");
        if (!first) r.add_series(cell);
        first = false;
        ++n_cols;
      }
      if (n_cols == 0) throw io_error("record: empty header");
      have_header = true;
      continue;
    }
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      double v;
      try {
        v = std::stod(cell);
      } catch (...) {
        throw io_error("record: non-numeric cell '" + cell + "' in " + path);
      }
      if (col == 0)
        r.times.push_back(v);
      else if (col - 1 < r.series.size())
        r.series[col - 1].push_back(v);
      else
        throw io_error("record: row wider than header in " + path);
      ++col;
    }
    if (col != n_cols) throw io_error("record: ragged row in " + path);
  }
  if (!have_header) throw io_error("record: no header in " + path);
  return r;
}

}  // namespace mlab
