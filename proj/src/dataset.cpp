#include "tvselect/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tvselect/errors.hpp"

namespace tvselect {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
  }
  return fields;
}

double parse_number(const std::string& cell, long row, const std::string& column) {
  double value = 0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end)
    throw ParseError(
        fmt::format("row {}: column '{}' has non-numeric value '{}'", row, column, cell), row,
        column);
  if (!std::isfinite(value))
    throw ParseError(fmt::format("row {}: column '{}' is not finite ('{}')", row, column, cell),
                     row, column);
  return value;
}

}  // namespace

int LongitudinalDataset::num_observations() const {
  int n = 0;
  for (const auto& s : subjects) n += s.size();
  return n;
}

std::vector<double> LongitudinalDataset::all_times() const {
  std::vector<double> times;
  times.reserve(num_observations());
  for (const auto& s : subjects) times.insert(times.end(), s.times.begin(), s.times.end());
  return times;
}

LongitudinalDataset read_long_csv(const std::filesystem::path& path, CsvReadOptions options) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));

  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("'{}' is empty", path.string()));
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  int subject_col = -1, time_col = -1, y_col = -1;
  std::vector<int> x_cols;
  LongitudinalDataset data;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == "subject") {
      subject_col = c;
    } else if (header[c] == "time") {
      time_col = c;
    } else if (header[c] == "y") {
      y_col = c;
    } else {
      x_cols.push_back(c);
      data.covariate_names.push_back(header[c]);
    }
  }
  if (subject_col < 0) throw ParseError("missing required column 'subject'", 0, "subject");
  if (time_col < 0) throw ParseError("missing required column 'time'", 0, "time");
  if (y_col < 0 && options.require_response)
    throw ParseError("missing required column 'y'", 0, "y");
  if (x_cols.empty()) throw ParseError("no covariate columns found");
  data.has_response = y_col >= 0;

  struct Row {
    double time;
    double y;
    std::vector<double> x;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows_by_subject;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError(
          fmt::format("row {}: expected {} fields, found {}", row, header.size(), fields.size()),
          row);
    const std::string& id = fields[subject_col];
    if (id.empty()) throw ParseError(fmt::format("row {}: empty subject id", row), row, "subject");
    Row r;
    r.time = parse_number(fields[time_col], row, "time");
    r.y = y_col >= 0 ? parse_number(fields[y_col], row, "y") : 0.0;
    r.x.reserve(x_cols.size());
    for (std::size_t k = 0; k < x_cols.size(); ++k)
      r.x.push_back(parse_number(fields[x_cols[k]], row, data.covariate_names[k]));
    auto [it, inserted] = rows_by_subject.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(r));
  }
  if (row == 0) throw ParseError(fmt::format("'{}' has no data rows", path.string()));

  const int p = static_cast<int>(x_cols.size());
  for (const auto& id : order) {
    auto& rows = rows_by_subject[id];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.time < b.time; });
    SubjectRecord s;
    s.subject_id = id;
    s.covariates.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      s.times.push_back(rows[j].time);
      if (data.has_response) s.responses.push_back(rows[j].y);
      for (int k = 0; k < p; ++k) s.covariates(static_cast<Eigen::Index>(j), k) = rows[j].x[k];
    }
    data.subjects.push_back(std::move(s));
  }
  data.time_domain = {0.0, 1.0};
  return data;
}

void write_long_csv(std::ostream& out, const LongitudinalDataset& dataset) {
  const bool with_y = dataset.has_response;
  out << (with_y ? "subject,time,y" : "subject,time");
  for (const auto& name : dataset.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& s : dataset.subjects)
    for (int j = 0; j < s.size(); ++j) {
      fmt::print(out, "{},{:.17g}", s.subject_id, s.times[j]);
      if (with_y) fmt::print(out, ",{:.17g}", s.responses[j]);
      for (Eigen::Index k = 0; k < s.covariates.cols(); ++k) fmt::print(out, ",{:.17g}", s.covariates(j, k));
      out << '\n';
    }
}

LongitudinalDataset rescale_times(LongitudinalDataset dataset) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : dataset.subjects)
    for (double t : s.times) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (dataset.subjects.empty()) return dataset;
  return rescale_times(std::move(dataset), TimeDomain{lo, hi});
}

LongitudinalDataset rescale_times(LongitudinalDataset dataset, const TimeDomain& domain) {
  for (auto& s : dataset.subjects)
    for (double& t : s.times) t = domain.rescale(t);
  dataset.time_domain = domain;
  return dataset;
}

LongitudinalDataset load_long_csv(const std::filesystem::path& path, CsvReadOptions options) {
  return rescale_times(read_long_csv(path, options));
}

LongitudinalDataset demean_within_subject(LongitudinalDataset dataset) {
  auto& state = dataset.preprocessing;
  if (state.demeaned) return dataset;
  const int p = dataset.num_covariates();
  state.subject_means_y.assign(dataset.subjects.size(), 0.0);
  state.subject_means_x = Eigen::MatrixXd::Zero(dataset.num_subjects(), p);
  for (int i = 0; i < dataset.num_subjects(); ++i) {
    auto& s = dataset.subjects[i];
    if (s.size() == 0) continue;
    if (!s.responses.empty()) {
      const double ybar =
          std::accumulate(s.responses.begin(), s.responses.end(), 0.0) / s.size();
      for (double& y : s.responses) y -= ybar;
      state.subject_means_y[i] = ybar;
    }
    const Eigen::RowVectorXd xbar = s.covariates.colwise().mean();
    s.covariates.rowwise() -= xbar;
    state.subject_means_x.row(i) = xbar;
  }
  state.demeaned = true;
  return dataset;
}

LongitudinalDataset standardize(LongitudinalDataset dataset,
                                const std::vector<std::string>& exempt) {
  const int p = dataset.num_covariates();
  for (const auto& name : exempt)
    if (std::find(dataset.covariate_names.begin(), dataset.covariate_names.end(), name) ==
        dataset.covariate_names.end())
      throw ConfigError(fmt::format("exempt column '{}' is not a covariate", name));

  Standardization s;
  s.center.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  s.exempt.assign(p, false);
  const double n = dataset.num_observations();
  for (int k = 0; k < p; ++k) {
    if (std::find(exempt.begin(), exempt.end(), dataset.covariate_names[k]) != exempt.end()) {
      s.exempt[k] = true;
      continue;
    }
    double sum = 0;
    for (const auto& subj : dataset.subjects) sum += subj.covariates.col(k).sum();
    const double mean = sum / n;
    double ss = 0;
    for (const auto& subj : dataset.subjects)
      ss += (subj.covariates.col(k).array() - mean).square().sum();
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0))
      throw DegenerateDesignError(
          fmt::format("covariate '{}' has zero variance", dataset.covariate_names[k]));
    s.center[k] = mean;
    s.scale[k] = sd;
  }
  return apply_standardization(std::move(dataset), s);
}

LongitudinalDataset apply_standardization(LongitudinalDataset dataset, const Standardization& s) {
  const int p = dataset.num_covariates();
  if (static_cast<int>(s.center.size()) != p || static_cast<int>(s.scale.size()) != p)
    throw DimensionError(fmt::format("standardization has {} columns, data has {}",
                                     s.center.size(), p));
  for (auto& subj : dataset.subjects)
    for (int k = 0; k < p; ++k)
      subj.covariates.col(k) = (subj.covariates.col(k).array() - s.center[k]) / s.scale[k];
  dataset.preprocessing.standardization = s;
  return dataset;
}

LongitudinalDataset unstandardize(LongitudinalDataset dataset) {
  auto& state = dataset.preprocessing;
  if (!state.standardization) return dataset;
  const auto& s = *state.standardization;
  for (auto& subj : dataset.subjects)
    for (int k = 0; k < dataset.num_covariates(); ++k)
      subj.covariates.col(k) = subj.covariates.col(k).array() * s.scale[k] + s.center[k];
  state.standardization.reset();
  return dataset;
}

}  // namespace tvselect
