#include "pnet/data.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pnet/errors.hpp"
#include "pnet/random.hpp"

namespace pnet {
namespace {

template <class F>
Dataset generate_1d(Eigen::Index n, double lo, double hi, std::uint64_t seed, F target) {
  if (n < 1) throw InputError("generator: need at least one sample");
  if (!(lo < hi)) throw InputError("generator: empty range");
  Rng rng(seed);
  Dataset data;
  data.inputs.resize(n, 1);
  data.targets.resize(n, 1);
  for (Eigen::Index d = 0; d < n; ++d) {
    const double x = rng.uniform(lo, hi);
    data.inputs(d, 0) = x;
    data.targets(d, 0) = target(x);
  }
  return data;
}

template <class Rng>
void shuffle(std::vector<Eigen::Index>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.below(i)]);
  }
}

}  // namespace

Eigen::Index Dataset::label(Eigen::Index d) const {
  Eigen::Index best = 0;
  targets.row(d).maxCoeff(&best);
  return best;
}

void validate(const Dataset& data) {
  if (data.size() < 1) throw DimensionError("dataset: empty");
  if (data.targets.rows() != data.size()) throw DimensionError("dataset: input and target counts differ");
  if (data.feature_dim() < 1 || data.target_dim() < 1) throw DimensionError("dataset: zero-width inputs or targets");
  if (!data.inputs.allFinite() || !data.targets.allFinite()) throw InputError("dataset: non-finite values");
  if (data.task == Task::classification) {
    for (Eigen::Index d = 0; d < data.size(); ++d) {
      const auto row = data.targets.row(d);
      const auto ones = (row.array() == 1.0).count();
      const auto zeros = (row.array() == 0.0).count();
      if (ones != 1 || ones + zeros != row.size()) {
        throw InputError("dataset: row " + std::to_string(d + 1) + " is not one-hot");
      }
    }
  }
}

Dataset subset(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.task = data.task;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.feature_dim());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), data.target_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(i) = data.inputs.row(rows[i]);
    out.targets.row(i) = data.targets.row(rows[i]);
  }
  return out;
}

Dataset gen_sign(Eigen::Index n, double lo, double hi, std::uint64_t seed) {
  return generate_1d(n, lo, hi, seed, [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
}

Dataset gen_square(Eigen::Index n, std::uint64_t seed) {
  return generate_1d(n, -1.0, 1.0, seed, [](double x) { return x * x; });
}

Dataset gen_abs(Eigen::Index n, std::uint64_t seed) {
  return generate_1d(n, -1.0, 1.0, seed, [](double x) { return std::abs(x); });
}

Dataset gen_activity_standin(Eigen::Index per_class, std::uint64_t seed) {
  if (per_class < 1) throw InputError("gen_activity_standin: per_class must be >= 1");
  Rng rng(seed);
  RowMatrix means(kStandinClasses, kStandinFeatures);
  for (int c = 0; c < kStandinClasses; ++c) {
    for (int f = 0; f < kStandinFeatures; ++f) means(c, f) = rng.normal();
    means.row(c) *= kStandinMeanNorm / means.row(c).norm();
  }
  Dataset data;
  data.task = Task::classification;
  data.inputs.resize(kStandinClasses * per_class, kStandinFeatures);
  data.targets = RowMatrix::Zero(kStandinClasses * per_class, kStandinClasses);
  for (int c = 0; c < kStandinClasses; ++c) {
    for (Eigen::Index i = 0; i < per_class; ++i) {
      const Eigen::Index d = c * per_class + i;
      for (int f = 0; f < kStandinFeatures; ++f) data.inputs(d, f) = means(c, f) + rng.normal();
      data.targets(d, c) = 1.0;
    }
  }
  return data;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, Eigen::Index train_per_class,
                                             Eigen::Index test_total, std::uint64_t seed) {
  if (data.task != Task::classification) throw InputError("split_train_test: needs a classification dataset");
  if (train_per_class < 0 || test_total < 0) throw InputError("split_train_test: negative counts");
  std::vector<std::vector<Eigen::Index>> by_class(data.target_dim());
  for (Eigen::Index d = 0; d < data.size(); ++d) by_class[data.label(d)].push_back(d);

  Rng rng(seed);
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> rest;
  for (auto& members : by_class) {
    if (static_cast<Eigen::Index>(members.size()) < train_per_class) {
      throw InputError("split_train_test: a class has fewer than " + std::to_string(train_per_class) + " samples");
    }
    shuffle(members, rng);
    train.insert(train.end(), members.begin(), members.begin() + train_per_class);
    rest.insert(rest.end(), members.begin() + train_per_class, members.end());
  }
  if (static_cast<Eigen::Index>(rest.size()) < test_total) {
    throw InputError("split_train_test: only " + std::to_string(rest.size()) + " samples left for testing");
  }
  shuffle(rest, rng);
  rest.resize(test_total);
  return {subset(data, train), subset(data, rest)};
}

void save_csv(const Dataset& data, std::ostream& out) {
  validate(data);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.feature_dim(); ++i) out << 'x' << i + 1 << ',';
  for (Eigen::Index i = 0; i < data.target_dim(); ++i) out << 'y' << i + 1 << ',';
  out << "task\n";
  for (Eigen::Index d = 0; d < data.size(); ++d) {
    for (Eigen::Index i = 0; i < data.feature_dim(); ++i) out << data.inputs(d, i) << ',';
    for (Eigen::Index i = 0; i < data.target_dim(); ++i) out << data.targets(d, i) << ',';
    out << to_string(data.task) << '\n';
  }
}

Dataset load_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  auto split = [](const std::string& text) {
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!text.empty() && text.back() == ',') fields.emplace_back();
    return fields;
  };

  if (!next_line()) throw ParseError("empty file", 0);
  const auto header = split(line);
  Eigen::Index n_x = 0;
  Eigen::Index n_y = 0;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    const std::string& name = header[i];
    const std::string expect_x = "x" + std::to_string(n_x + 1);
    const std::string expect_y = "y" + std::to_string(n_y + 1);
    if (n_y == 0 && name == expect_x) {
      ++n_x;
    } else if (name == expect_y) {
      ++n_y;
    } else {
      throw ParseError("unexpected header column '" + name + "'", line_no);
    }
  }
  if (header.empty() || header.back() != "task" || n_x == 0 || n_y == 0) {
    throw ParseError("header must be x1..xn,y1..ym,task", line_no);
  }

  std::vector<double> values;
  std::optional<Task> task;
  Eigen::Index rows = 0;
  while (next_line()) {
    const auto fields = split(line);
    if (static_cast<Eigen::Index>(fields.size()) != n_x + n_y + 1) {
      throw ParseError("expected " + std::to_string(n_x + n_y + 1) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(fields[i], &used));
        if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
      } catch (const std::exception&) {
        throw ParseError("not a number: '" + fields[i] + "'", line_no);
      }
    }
    Task row_task;
    try {
      row_task = parse_task(fields.back());
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (task && *task != row_task) throw ParseError("task column changes between rows", line_no);
    task = row_task;
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows", line_no);

  Dataset data;
  data.task = *task;
  data.inputs.resize(rows, n_x);
  data.targets.resize(rows, n_y);
  const Eigen::Index width = n_x + n_y;
  for (Eigen::Index d = 0; d < rows; ++d) {
    for (Eigen::Index i = 0; i < n_x; ++i) data.inputs(d, i) = values[d * width + i];
    for (Eigen::Index i = 0; i < n_y; ++i) data.targets(d, i) = values[d * width + n_x + i];
  }
  try {
    validate(data);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_csv(data, out);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load_csv(in);
}

}  // namespace pnet
