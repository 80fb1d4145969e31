#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>

#include "pnet/network.hpp"

namespace pnet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N paired samples, one per row. Classification targets are one-hot rows.
struct Dataset {
  RowMatrix inputs;
  RowMatrix targets;
  Task task = Task::regression;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index feature_dim() const { return inputs.cols(); }
  Eigen::Index target_dim() const { return targets.cols(); }
  /// argmax of target row d, lowest index on ties.
  Eigen::Index label(Eigen::Index d) const;
};

/// Throws DimensionError / InputError on empty, ragged, non-finite or non-one-hot data.
void validate(const Dataset& data);

/// Rows of `data` picked by `rows`, in that order.
Dataset subset(const Dataset& data, const std::vector<Eigen::Index>& rows);

/// x ~ U[lo, hi], y = sign(x) with sign(0) = 0.
Dataset gen_sign(Eigen::Index n, double lo, double hi, std::uint64_t seed);
/// x ~ U[-1, 1], y = x^2.
Dataset gen_square(Eigen::Index n, std::uint64_t seed);
/// x ~ U[-1, 1], y = |x|.
Dataset gen_abs(Eigen::Index n, std::uint64_t seed);

inline constexpr int kStandinClasses = 5;
inline constexpr int kStandinFeatures = 60;
inline constexpr double kStandinMeanNorm = 3.0;

/// Five isotropic unit-variance Gaussian classes in 60 dimensions. Class means
/// are seeded uniform directions on the sphere scaled to norm 3. Rows are grouped
/// by class, `per_class` rows each.
Dataset gen_activity_standin(Eigen::Index per_class, std::uint64_t seed);

/// Balanced training set of `train_per_class` rows per class, plus `test_total`
/// rows drawn uniformly from what remains. Throws InputError when infeasible.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data, Eigen::Index train_per_class,
                                             Eigen::Index test_total, std::uint64_t seed);

// CSV with header x1..xn,y1..ym,task and the task name repeated in the last
// column of every row. Values use 17 significant digits.
void save_csv(const Dataset& data, std::ostream& out);
Dataset load_csv(std::istream& in);
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace pnet
