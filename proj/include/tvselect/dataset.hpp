#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tvselect {

struct SubjectRecord {
  std::string subject_id;
  std::vector<double> times;      // sorted non-decreasing
  std::vector<double> responses;  // empty when the source had no response column
  Eigen::MatrixXd covariates;     // n_i x p

  int size() const { return static_cast<int>(times.size()); }
};

/// Per-covariate affine map x_std = (x - center) / scale.
struct Standardization {
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<bool> exempt;
};

struct PreprocessState {
  bool demeaned = false;
  std::vector<double> subject_means_y;
  Eigen::MatrixXd subject_means_x;  // N x p
  std::optional<Standardization> standardization;
};

struct TimeDomain {
  double min = 0;
  double max = 1;

  double rescale(double t) const { return max > min ? (t - min) / (max - min) : 0.0; }
};

struct LongitudinalDataset {
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> covariate_names;
  TimeDomain time_domain;
  PreprocessState preprocessing;
  bool has_response = true;

  int num_covariates() const { return static_cast<int>(covariate_names.size()); }
  int num_subjects() const { return static_cast<int>(subjects.size()); }
  int num_observations() const;
  std::vector<double> all_times() const;
};

struct CsvReadOptions {
  bool require_response = true;
};

/// Reads long-format CSV (subject,time,y,x1..xp; any further columns are
/// covariates in header order). Times are left on their original scale and
/// rows are grouped by subject in order of first appearance, sorted by time.
LongitudinalDataset read_long_csv(const std::filesystem::path& path, CsvReadOptions options = {});

/// Writes `dataset` as long-format CSV with 17 significant digits. The y
/// column is omitted when the dataset has no responses.
void write_long_csv(std::ostream& out, const LongitudinalDataset& dataset);

/// Rescales times to [0,1] by the pooled (min, max) over all observations.
LongitudinalDataset rescale_times(LongitudinalDataset dataset);

/// Rescales with a fixed domain; resulting times may fall outside [0,1].
LongitudinalDataset rescale_times(LongitudinalDataset dataset, const TimeDomain& domain);

/// read_long_csv followed by rescale_times.
LongitudinalDataset load_long_csv(const std::filesystem::path& path, CsvReadOptions options = {});

/// Subtracts subject means from the response and every covariate. A dataset
/// that is already de-meaned is returned unchanged.
LongitudinalDataset demean_within_subject(LongitudinalDataset dataset);

/// Pooled centering and scaling (population variance) of every covariate
/// except those named in `exempt`, which keep center 0 and scale 1.
LongitudinalDataset standardize(LongitudinalDataset dataset,
                                const std::vector<std::string>& exempt = {});

/// Applies a previously estimated standardization (e.g. to test data).
LongitudinalDataset apply_standardization(LongitudinalDataset dataset, const Standardization& s);

/// Inverts standardize on the covariates.
LongitudinalDataset unstandardize(LongitudinalDataset dataset);

}  // namespace tvselect
