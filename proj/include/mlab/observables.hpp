#pragma once

#include <map>
#include <string>
#include <vector>

namespace mlab {

// Time series logged during a run: a shared time axis plus named columns
// (x_mean, p_mean, p2, norm, and whatever diagnostics were enabled). Metadata
// travels as flat key/value strings and is embedded in CSV as comments.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;  // series[j].size() == times.size()
  std::map<std::string, std::string> meta;

  // Index of a named series, -1 when absent.
  int find(const std::string& name) const;
  const std::vector<double>& at(const std::string& name) const;
  // Appends a column (must match the current number of rows, or be started
  // before any row exists).
  std::vector<double>& add_series(const std::string& name);
};

// Relative deviation of one series between two records, compared at the
// times the records share (within 1e-9). Deviation at one time is
// |a-b| / max(scale_floor, (|a|+|b|)/2).
struct DivergenceReport {
  double max_rel_dev = 0;
  double t_at_max = 0;
  double first_exceed = 0;  // NaN when never crossed
  bool crossed = false;
  int n_compared = 0;
};

DivergenceReport divergence(const TrajectoryRecord& a, const TrajectoryRecord& b,
                            const std::string& series, double threshold,
                            double scale_floor = 0.0);

// Least-squares slope of the series over the trailing window_fraction of the
// time span. saturated means the extrapolated change across the window is at
// most rel_tol of the window mean magnitude (or of scale_floor if larger).
struct SaturationReport {
  double slope = 0;
  double rel_change = 0;
  bool saturated = false;
  double window_start = 0;
  int n_points = 0;
};

SaturationReport saturation_check(const TrajectoryRecord& r, const std::string& series,
                                  double window_fraction = 0.5, double rel_tol = 0.1,
                                  double scale_floor = 0.0);

// CSV round trip. Writing uses %.17g; reading accepts files this library
// wrote (comment meta lines "# key = value", one header row, numeric rows).
void record_to_csv(const TrajectoryRecord& r, const std::string& path);
TrajectoryRecord record_from_csv(const std::string& path);

}  // namespace mlab
