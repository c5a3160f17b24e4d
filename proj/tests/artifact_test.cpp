#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tvselect/artifact.hpp"
#include "tvselect/design.hpp"
#include "tvselect/errors.hpp"

using namespace tvselect;

namespace {

struct Trained {
  LongitudinalDataset raw;
  LongitudinalDataset prepared;
  FitArtifact artifact;
};

Trained train(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trained t;
  t.raw = testing_support::random_dataset(rng, 25, 4, 3, 0.3);
  for (auto& s : t.raw.subjects)
    for (double& time : s.times) time = 10 + 5 * time;
  t.prepared = standardize(rescale_times(t.raw));
  auto basis = std::make_shared<const Basis>(build_basis<double>(SplineConfig{3, 3}));
  const Fit fit = fit_bcd(build_design(t.prepared, *basis), basis, PenaltyConfig{0.02, 0.001});
  t.artifact = make_artifact(fit, t.prepared);
  return t;
}

}  // namespace

TEST(Artifact, JsonRoundTripIsExact) {
  const auto t = train(1);
  const auto back = artifact_from_json(to_json(t.artifact));
  EXPECT_EQ(back.covariate_names, t.artifact.covariate_names);
  EXPECT_EQ(back.fit.beta0, t.artifact.fit.beta0);
  EXPECT_TRUE(back.fit.mu == t.artifact.fit.mu);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(back.fit.theta[k] == t.artifact.fit.theta[k]);
  EXPECT_EQ(back.time_domain.min, t.artifact.time_domain.min);
  EXPECT_EQ(back.time_domain.max, t.artifact.time_domain.max);
  EXPECT_TRUE(back.fit.basis->knots() == t.artifact.fit.basis->knots());
  EXPECT_EQ(back.partition.s_vary, t.artifact.partition.s_vary);
  EXPECT_EQ(back.preprocessing.standardization->scale, t.artifact.preprocessing.standardization->scale);
}

TEST(Artifact, FileRoundTripPredictsIdentically) {
  const auto t = train(2);
  const auto dir = testing_support::scratch_dir("artifact");
  save_artifact(dir / "fit.json", t.artifact);
  const auto back = load_artifact(dir / "fit.json");
  const auto again = prepare_for_artifact(t.raw, back);
  const auto d_orig = build_design(t.prepared, *t.artifact.fit.basis);
  const auto d_back = build_design(again, *back.fit.basis);
  EXPECT_LT((fitted_values(d_orig, t.artifact.fit) - fitted_values(d_back, back.fit)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Artifact, IncompatibleCovariates) {
  const auto t = train(3);
  auto other = t.raw;
  std::swap(other.covariate_names[0], other.covariate_names[1]);
  EXPECT_THROW(check_compatible(t.artifact, other), ArtifactMismatchError);
  other = t.raw;
  other.covariate_names.pop_back();
  EXPECT_THROW(check_compatible(t.artifact, other), ArtifactMismatchError);
  EXPECT_NO_THROW(check_compatible(t.artifact, t.raw));
}

TEST(Artifact, MalformedJson) {
  const auto t = train(4);
  auto j = to_json(t.artifact);
  j.erase("mu");
  EXPECT_THROW(artifact_from_json(j), ArtifactMismatchError);
  j = to_json(t.artifact);
  j["format_version"] = 99;
  EXPECT_THROW(artifact_from_json(j), ArtifactMismatchError);
  j = to_json(t.artifact);
  j["theta"][0] = std::vector<double>{1.0};
  EXPECT_THROW(artifact_from_json(j), ArtifactMismatchError);
}

TEST(Artifact, MissingFile) {
  EXPECT_THROW(load_artifact("/nonexistent/fit.json"), Error);
}
