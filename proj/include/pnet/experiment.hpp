#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pnet/data.hpp"
#include "pnet/network.hpp"
#include "pnet/training.hpp"

namespace pnet {

/// One experiment: network layout, the p-network training table, the
/// feedforward baseline table, the dataset recipe and the repetition count.
/// Every field maps to a flat JSON key of the same name.
struct ExperimentConfig {
  std::string name = "custom";

  // Network.
  std::vector<int> layers{1, 5, 3, 1};
  Task head = Task::regression;
  double lambda = 1.0;
  double initial_p = 2.0;                   ///< hidden layers (and output, unless overridden)
  std::optional<double> initial_p_output;   ///< regression output layer

  // p-network training.
  double alpha_w = 0.1;
  double alpha_p = 100.0;                   ///< used by the "adaptive" variant
  int max_iters = 1000;
  double max_error = 1e-3;
  int inner_iters = 100;

  // Feedforward baseline.
  Activation baseline_hidden = Activation::satlins;
  Activation baseline_output = Activation::purelin;
  double baseline_alpha_w = 0.01;
  double baseline_max_gradient = 1e-4;
  int baseline_max_iters = 1000;

  /// Any of "adaptive", "frozen" (alpha_p = 0) and "feedforward".
  std::vector<std::string> variants{"adaptive"};

  // Data.
  std::string dataset = "sign";   ///< sign | square | abs | activity | csv
  int n_samples = 100;
  double range_lo = -5.0;
  double range_hi = 5.0;
  int grid_points = 201;          ///< regression evaluation grid over [range_lo, range_hi]
  int per_class = 1000;           ///< activity stand-in: generated rows per class
  int train_per_class = 500;
  int test_total = 500;
  std::uint64_t data_seed = 2021; ///< activity stand-in generation
  std::string data_path;          ///< dataset == "csv"

  int repetitions = 5;
  std::uint64_t seed = 1;         ///< repetition r uses seed + r
  int threads = 0;                ///< concurrent training runs; 0 uses every hardware thread
};

/// Table-bound defaults for ex1, ex2a, ex2b and ex3. Throws InputError for other names.
ExperimentConfig preset(const std::string& name);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Overlays the keys present in `doc` onto `base`; unknown keys are an InputError.
ExperimentConfig apply_json(ExperimentConfig base, const nlohmann::json& doc);
/// `key=value` with value parsed as JSON when possible, else as a string.
ExperimentConfig apply_override(ExperimentConfig base, const std::string& assignment);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

void validate(const ExperimentConfig& cfg);

TrainConfig pnet_train_config(const ExperimentConfig& cfg, bool adaptive);
TrainConfig baseline_train_config(const ExperimentConfig& cfg);

/// Target function of a regression generator: sign, square or abs.
double target_function(const std::string& dataset, double x);
/// Training set for a regression recipe, or the whole CSV file.
Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed);
/// grid_points inputs evenly spaced over [range_lo, range_hi] with exact targets.
Dataset make_grid(const ExperimentConfig& cfg);

struct RunRecord {
  std::string variant;
  std::uint64_t seed = 0;
  double train_error = 0.0;   ///< E (regression) or classification error
  double test_error = 0.0;    ///< E on the grid (regression) or classification error on the test split
  Network net;
  TrainLog log;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  /// Mean over repetitions of a variant's train/test error.
  double mean_train(const std::string& variant) const;
  double mean_test(const std::string& variant) const;
  std::vector<const RunRecord*> of(const std::string& variant) const;
};

/// Runs every variant for every repetition. When `out_dir` is set, writes
/// error_log.csv, p_evolution.csv, summary.csv, predictions.csv (regression)
/// and models/<variant>_<seed>.model, plus the datasets each seed used under data/.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                                std::ostream* progress = nullptr);

}  // namespace pnet
