#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "tvselect/dataset.hpp"

namespace testing_support {

using tvselect::LongitudinalDataset;

/// Subjects with sorted uniform times on [0,1], standard normal covariates and
/// y = sum_k x_k beta_k(t) + sigma * N(0,1).
inline LongitudinalDataset dataset_from_coefficients(std::mt19937_64& rng, int N, int n_i, int p,
                                                     double sigma,
                                                     const std::function<double(int, double)>& beta) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LongitudinalDataset data;
  for (int k = 0; k < p; ++k) data.covariate_names.push_back(fmt::format("x{}", k + 1));
  for (int i = 0; i < N; ++i) {
    tvselect::SubjectRecord s;
    s.subject_id = fmt::format("id{:03}", i);
    s.times.resize(n_i);
    for (double& t : s.times) t = unit(rng);
    std::sort(s.times.begin(), s.times.end());
    s.covariates.resize(n_i, p);
    s.responses.resize(n_i);
    for (int j = 0; j < n_i; ++j) {
      double y = 0;
      for (int k = 0; k < p; ++k) {
        s.covariates(j, k) = normal(rng);
        y += s.covariates(j, k) * beta(k, s.times[j]);
      }
      s.responses[j] = y + sigma * normal(rng);
    }
    data.subjects.push_back(std::move(s));
  }
  return data;
}

/// Generic instance: effect k is constant, varying or zero depending on k mod 3.
inline LongitudinalDataset random_dataset(std::mt19937_64& rng, int N, int n_i, int p, double sigma) {
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  std::vector<double> a(p), b(p);
  for (int k = 0; k < p; ++k) {
    a[k] = k % 3 == 2 ? 0.0 : coef(rng);
    b[k] = k % 3 == 0 ? coef(rng) : 0.0;
  }
  return dataset_from_coefficients(rng, N, n_i, p, sigma, [=](int k, double t) {
    return a[k] + b[k] * std::sin(2 * 3.14159265358979323846 * t);
  });
}

/// Composite Simpson rule on [0,1] with 20000 panels.
template <typename F>
double integrate_fine(F&& f, int panels = 20000) {
  const double h = 1.0 / panels;
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4 : 2) * f(i * h);
  return acc * h / 3;
}

/// Trapezoid rule on squared central second differences over m grid points.
template <typename F>
double fd_roughness(F&& g, int m) {
  const double h = 1.0 / (m - 1);
  std::vector<double> v(m);
  for (int i = 0; i < m; ++i) v[i] = g(i * h);
  std::vector<double> d2(m);
  for (int i = 1; i + 1 < m; ++i) d2[i] = (v[i + 1] - 2 * v[i] + v[i - 1]) / (h * h);
  d2[0] = d2[1];
  d2[m - 1] = d2[m - 2];
  double acc = 0;
  for (int i = 0; i + 1 < m; ++i) acc += (d2[i] * d2[i] + d2[i + 1] * d2[i + 1]) / 2 * h;
  return acc;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Relative path -> contents for every regular file under `dir`.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      out[std::filesystem::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tvselect_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
