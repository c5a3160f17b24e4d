#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tvselect/basis.hpp"
#include "tvselect/dataset.hpp"
#include "tvselect/errors.hpp"

namespace tvselect {

/// Stacked regression blocks: y, X (n x p) and Z_k (n x q) with rows
/// x_ijk * B~(t_ij)^T. Rows follow subjects in input order, observations in
/// time order.
template <typename Scalar = double>
struct DesignBlocks {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector y;
  Matrix X;
  std::vector<Matrix> Z;
  Vector times;
  std::vector<int> subject_of_row;
  bool intercept_included = true;

  Eigen::Index rows() const { return X.rows(); }
  int num_covariates() const { return static_cast<int>(X.cols()); }
  int basis_size() const { return Z.empty() ? 0 : static_cast<int>(Z.front().cols()); }
};

/// Assembles the design from a (preprocessed) dataset. The intercept is
/// included unless the data has been de-meaned within subject.
template <typename Scalar = double>
DesignBlocks<Scalar> build_design(const LongitudinalDataset& dataset,
                                  const CenteredSplineBasis<Scalar>& basis) {
  using Matrix = typename DesignBlocks<Scalar>::Matrix;
  const Eigen::Index n = dataset.num_observations();
  const int p = dataset.num_covariates();
  const int q = basis.size();
  DesignBlocks<Scalar> design;
  design.y.resize(n);
  design.X.resize(n, p);
  design.times.resize(n);
  design.subject_of_row.reserve(n);
  design.Z.assign(p, Matrix(n, q));
  design.intercept_included = !dataset.preprocessing.demeaned;

  Eigen::Index row = 0;
  for (int i = 0; i < dataset.num_subjects(); ++i) {
    const auto& s = dataset.subjects[i];
    for (int j = 0; j < s.size(); ++j, ++row) {
      const Scalar t = static_cast<Scalar>(s.times[j]);
      const auto centered = basis.eval_centered(t);
      design.y(row) = s.responses.empty() ? Scalar(0) : static_cast<Scalar>(s.responses[j]);
      design.times(row) = t;
      design.subject_of_row.push_back(i);
      for (int k = 0; k < p; ++k) {
        const Scalar x = static_cast<Scalar>(s.covariates(j, k));
        design.X(row, k) = x;
        design.Z[k].row(row) = x * centered.transpose();
      }
    }
  }
  return design;
}

/// Rows of `design` belonging to the listed subjects (indices into the
/// original dataset), in the original row order.
template <typename Scalar>
DesignBlocks<Scalar> subset_rows(const DesignBlocks<Scalar>& design,
                                 const std::vector<bool>& keep_subject) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < design.rows(); ++r)
    if (keep_subject.at(design.subject_of_row[r])) rows.push_back(r);
  DesignBlocks<Scalar> out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.times.resize(m);
  out.X.resize(m, design.X.cols());
  out.Z.assign(design.Z.size(), typename DesignBlocks<Scalar>::Matrix(m, design.basis_size()));
  out.intercept_included = design.intercept_included;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = rows[i];
    out.y(i) = design.y(r);
    out.times(i) = design.times(r);
    out.X.row(i) = design.X.row(r);
    for (std::size_t k = 0; k < design.Z.size(); ++k) out.Z[k].row(i) = design.Z[k].row(r);
    out.subject_of_row.push_back(design.subject_of_row[r]);
  }
  return out;
}

}  // namespace tvselect
