#pragma once

// Library side of the pnet CLI subcommands, kept here so tests can drive them
// without spawning processes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pnet/data.hpp"
#include "pnet/experiment.hpp"
#include "pnet/network.hpp"
#include "pnet/oracle.hpp"

namespace pnet {

/// CSV `p,a,v,dv_da` for every p on n_points evenly spaced inputs in [a_min, a_max].
void write_shape_csv(std::span<const double> p_values, double lambda, double a_min, double a_max, int n_points,
                     int inner_iters, std::ostream& out);

struct GradcheckSpec {
  std::vector<int> layers{2, 3, 2};
  Task head = Task::regression;
  double lambda = 1.0;
  /// p values are drawn uniformly in [p_lo, p_hi]; equal bounds give a constant p.
  double p_lo = 1.2;
  double p_hi = 6.0;
  int samples = 5;
  std::uint64_t seed = 42;
  int inner_iters = 200;
  double h = 1e-6;
};

Network gradcheck_network(const GradcheckSpec& spec);
/// Standard-normal inputs; regression targets standard normal, classification
/// targets one-hot with uniform labels.
Dataset gradcheck_batch(const GradcheckSpec& spec);

/// Prints one line per parameter class and returns 0 iff both are within
/// `tolerance`. `corrupt` perturbs one analytic weight gradient by 1e-2 to
/// prove the check can fail.
int run_gradcheck(const GradcheckSpec& spec, double tolerance, bool corrupt, std::ostream& out);

/// Trains one variant ("adaptive", "frozen" or "feedforward") of `cfg` on `data`,
/// saves the model and writes `<model>.log.csv` (iter,E). Returns the final E.
double train_model(const ExperimentConfig& cfg, const std::string& variant, const Dataset& data,
                   const std::filesystem::path& model_path);

struct EvalReport {
  double error = 0.0;                 ///< E
  double classification_error = -1.0; ///< negative for regression
};
EvalReport eval_model(const Network& net, const Dataset& data);

}  // namespace pnet
