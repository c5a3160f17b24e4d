#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_support.hpp"
#include "tvselect/artifact.hpp"
#include "tvselect/design.hpp"
#include "tvselect/tuning.hpp"

using namespace tvselect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd =
      fmt::format("'{}' {} > '{}' 2> '{}'", TVSELECT_CLI_PATH, args, out.string(), err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing_support::read_file(out);
  r.err = testing_support::read_file(err);
  return r;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

fs::path write_training_csv(const fs::path& dir, std::uint64_t seed, double time_scale = 1.0) {
  std::mt19937_64 rng(seed);
  auto data = testing_support::random_dataset(rng, 30, 4, 4, 0.3);
  for (auto& s : data.subjects)
    for (double& t : s.times) t *= time_scale;
  const auto path = dir / "train.csv";
  std::ofstream f(path);
  write_long_csv(f, data);
  return path;
}

}  // namespace

TEST(Cli, MissingInputFileIsUsageError) {
  const auto dir = testing_support::scratch_dir("cli_missing");
  const auto r = run_cli(fmt::format("fit --data {} --out {} --lambda1 0.1 --lambda2 0.01",
                                     (dir / "nope.csv").string(), (dir / "o").string()),
                         dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find((dir / "nope.csv").string()), std::string::npos) << r.err;
}

TEST(Cli, MissingRequiredOptionIsUsageError) {
  const auto dir = testing_support::scratch_dir("cli_required");
  const auto r = run_cli("fit --lambda1 0.1 --lambda2 0.01", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
}

TEST(Cli, FitThenPredictReproducesFittedValues) {
  const auto dir = testing_support::scratch_dir("cli_roundtrip");
  const auto csv = write_training_csv(dir, 1, 7.0);
  const auto fit_dir = dir / "fit", pred_dir = dir / "pred";
  const auto f = run_cli(fmt::format("fit --data {} --out {} --lambda1 0.02 --lambda2 0.001", csv.string(),
                                     fit_dir.string()),
                         dir);
  ASSERT_EQ(f.code, 0) << f.err;
  for (const char* name : {"fit.json", "partition.csv", "curves.csv", "config.json"})
    EXPECT_TRUE(fs::exists(fit_dir / name)) << name;
  const auto p = run_cli(fmt::format("predict --artifact {} --data {} --out {}", (fit_dir / "fit.json").string(),
                                     csv.string(), pred_dir.string()),
                         dir);
  ASSERT_EQ(p.code, 0) << p.err;

  const auto artifact = load_artifact(fit_dir / "fit.json");
  const auto data = prepare_for_artifact(read_long_csv(csv), artifact);
  const Eigen::VectorXd fitted = fitted_values(build_design(data, *artifact.fit.basis), artifact.fit);
  const auto rows = read_rows(pred_dir / "predictions.csv");
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(fitted.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 4u);
    EXPECT_TRUE(rows[i][3].empty());
    EXPECT_NEAR(std::stod(rows[i][2]), fitted(static_cast<Eigen::Index>(i)), 1e-10);
  }
}

TEST(Cli, LambdaAboveMaxGivesNoVaryingEffects) {
  const auto dir = testing_support::scratch_dir("cli_lmax");
  const auto csv = write_training_csv(dir, 2);
  auto data = standardize(load_long_csv(csv));
  const auto basis = build_basis<double>(SplineConfig{3, 4});
  const double lmax = lambda1_max(build_design(data, basis));
  const auto r = run_cli(fmt::format("fit --data {} --out {} --lambda1 {} --lambda2 0.01", csv.string(),
                                     (dir / "o").string(), 1.0001 * lmax),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : read_rows(dir / "o" / "partition.csv")) EXPECT_NE(row[2], "vary");
  EXPECT_NE(r.out.find("vary 0"), std::string::npos) << r.out;
}

TEST(Cli, PredictReportsRowsOutsideTheTimeRange) {
  const auto dir = testing_support::scratch_dir("cli_outside");
  const auto csv = write_training_csv(dir, 3);
  ASSERT_EQ(run_cli(fmt::format("fit --data {} --out {} --lambda1 0.05 --lambda2 0.01", csv.string(),
                                (dir / "fit").string()),
                    dir)
                .code,
            0);
  const auto fresh = dir / "new.csv";
  std::ofstream(fresh) << "subject,time,x1,x2,x3,x4\nn1,0.5,1,0,0,1\nn1,5.0,1,0,0,1\n";
  const auto r = run_cli(fmt::format("predict --artifact {} --data {} --out {}", (dir / "fit" / "fit.json").string(),
                                     fresh.string(), (dir / "pred").string()),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_rows(dir / "pred" / "predictions.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0][2].empty());
  EXPECT_TRUE(rows[1][2].empty());
  EXPECT_NE(rows[1][3].find("outside"), std::string::npos);
  EXPECT_NE(r.err.find("1 rows"), std::string::npos);
}

TEST(Cli, PredictRejectsOtherCovariates) {
  const auto dir = testing_support::scratch_dir("cli_mismatch");
  const auto csv = write_training_csv(dir, 4);
  ASSERT_EQ(run_cli(fmt::format("fit --data {} --out {} --lambda1 0.05 --lambda2 0.01", csv.string(),
                                (dir / "fit").string()),
                    dir)
                .code,
            0);
  const auto fresh = dir / "new.csv";
  std::ofstream(fresh) << "subject,time,x1,x2,zz,x4\nn1,0.5,1,0,0,1\n";
  const auto r = run_cli(fmt::format("predict --artifact {} --data {} --out {}", (dir / "fit" / "fit.json").string(),
                                     fresh.string(), (dir / "pred").string()),
                         dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ClassifyAllConstant) {
  const auto dir = testing_support::scratch_dir("cli_classify");
  FitArtifact a;
  auto basis = std::make_shared<const Basis>(build_basis<double>(SplineConfig{3, 2}));
  a.fit.basis = basis;
  a.fit.mu = Eigen::VectorXd::Constant(3, 2.0);
  a.fit.mu(1) = -1.5;
  a.fit.theta.assign(3, Eigen::VectorXd::Zero(basis->size()));
  a.fit.intercept = true;
  a.covariate_names = {"a", "b", "c"};
  a.num_observations = 200;
  a.partition = classify(a.fit, 200, 3);
  save_artifact(dir / "fit.json", a);
  const auto r = run_cli(fmt::format("classify --artifact {} --out {}", (dir / "fit.json").string(),
                                     (dir / "o").string()),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_rows(dir / "o" / "partition.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_EQ(row[2], "const");
}

TEST(Cli, TuneSurfaceMinimumIsReportedPair) {
  const auto dir = testing_support::scratch_dir("cli_tune");
  const auto csv = write_training_csv(dir, 5);
  const auto r = run_cli(fmt::format("tune --data {} --out {} --n-lambda1 6 --n-lambda2 3", csv.string(),
                                     (dir / "o").string()),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  double best = std::numeric_limits<double>::infinity(), l1 = 0, l2 = 0;
  for (const auto& row : read_rows(dir / "o" / "surface.csv")) {
    const double c = std::stod(row[2]);
    if (c < best) {
      best = c;
      l1 = std::stod(row[0]);
      l2 = std::stod(row[1]);
    }
  }
  const auto artifact = load_artifact(dir / "o" / "fit.json");
  EXPECT_EQ(artifact.fit.penalty.lambda1, l1);
  EXPECT_EQ(artifact.fit.penalty.lambda2, l2);
}

TEST(Cli, ConfigFileOverridesWithWarning) {
  const auto dir = testing_support::scratch_dir("cli_config");
  const auto csv = write_training_csv(dir, 6);
  std::ofstream(dir / "cfg.json") << R"({"lambda1": 0.5})";
  const auto r = run_cli(fmt::format("fit --data {} --out {} --lambda1 0.01 --lambda2 0.01 --config {}",
                                     csv.string(), (dir / "o").string(), (dir / "cfg.json").string()),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: --lambda1"), std::string::npos) << r.err;
  EXPECT_EQ(load_artifact(dir / "o" / "fit.json").fit.penalty.lambda1, 0.5);
}

TEST(Cli, SimulateWritesCsvAndIsDeterministic) {
  const auto dir = testing_support::scratch_dir("cli_sim");
  const std::string args = "simulate --scenario A --N 20 --n-i 3 --p 5 --s-v 1 --s-c 1 --reps 2 --seed 9 "
                           "--n-test 20 --methods tvselect,grouplasso --out ";
  ASSERT_EQ(run_cli(args + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli(args + (dir / "b").string(), dir).code, 0);
  EXPECT_EQ(testing_support::read_file(dir / "a" / "metrics.csv"), testing_support::read_file(dir / "b" / "metrics.csv"));
  const auto rows = read_rows(dir / "a" / "metrics.csv");
  EXPECT_EQ(rows.size(), 2u * 9u);
  for (const auto& row : rows) EXPECT_EQ(row.size(), 6u);
}

TEST(Cli, ScenarioFEchoesHalfAmplitude) {
  const auto dir = testing_support::scratch_dir("cli_simf");
  const auto r = run_cli(fmt::format("simulate --scenario F --N 15 --n-i 3 --p 4 --s-v 1 --s-c 1 --reps 1 "
                                     "--n-test 10 --methods tvselect --out {}",
                                     (dir / "o").string()),
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto echo = nlohmann::json::parse(testing_support::read_file(dir / "o" / "config.json"));
  EXPECT_EQ(std::stod(echo.at("amplitude").get<std::string>()), 0.5);
}
