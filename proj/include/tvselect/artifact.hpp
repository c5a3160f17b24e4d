#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvselect/dataset.hpp"
#include "tvselect/structure.hpp"
#include "tvselect/tuning.hpp"

namespace tvselect {

/// Everything needed to reuse a fit on new data: the fit with its basis, the
/// preprocessing that was applied, the covariate names and the partition.
struct FitArtifact {
  Fit fit;
  std::vector<std::string> covariate_names;
  TimeDomain time_domain;
  PreprocessState preprocessing;
  long num_observations = 0;
  StructuralPartition partition;
};

FitArtifact make_artifact(const Fit& fit, const LongitudinalDataset& dataset,
                          double threshold_multiplier = 1.0);

nlohmann::json to_json(const FitArtifact& artifact);
FitArtifact artifact_from_json(const nlohmann::json& j);

void save_artifact(const std::filesystem::path& path, const FitArtifact& artifact);
FitArtifact load_artifact(const std::filesystem::path& path);

/// Throws ArtifactMismatchError unless `dataset` has the artifact's covariates
/// in the same order.
void check_compatible(const FitArtifact& artifact, const LongitudinalDataset& dataset);

/// Applies the artifact's time rescaling and covariate standardization to raw
/// data. Times are not clamped, so rows outside the training domain keep
/// rescaled times outside [0,1].
LongitudinalDataset prepare_for_artifact(LongitudinalDataset dataset, const FitArtifact& artifact);

}  // namespace tvselect
