#include "pnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pnet/baseline.hpp"
#include "pnet/errors.hpp"

namespace pnet {

using nlohmann::json;

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "ex1") {
    // Defaults already hold the Ex.1 table.
    return cfg;
  }
  if (name == "ex2a" || name == "ex2b") {
    cfg.layers = {1, 10, 5, 3, 1};
    cfg.lambda = 1e-10;
    cfg.initial_p = 100.0;
    cfg.initial_p_output = 2.0;
    cfg.alpha_w = 0.01;
    cfg.alpha_p = 1e4;
    cfg.max_iters = 1000;
    cfg.max_error = 1e-4;
    cfg.inner_iters = 10;
    cfg.baseline_hidden = Activation::satlins;
    cfg.baseline_output = Activation::purelin;
    cfg.baseline_alpha_w = 0.01;
    cfg.baseline_max_gradient = 1e-4;
    cfg.variants = {"adaptive", "frozen", "feedforward"};
    cfg.dataset = name == "ex2a" ? "square" : "abs";
    cfg.range_lo = -1.0;
    cfg.range_hi = 1.0;
    return cfg;
  }
  if (name == "ex3") {
    cfg.layers = {kStandinFeatures, 30, 15, kStandinClasses};
    cfg.head = Task::classification;
    cfg.lambda = 1.0;
    cfg.initial_p = 5.0;
    cfg.alpha_w = 0.1;
    cfg.alpha_p = 0.1;
    cfg.max_iters = 1000;
    cfg.max_error = 1e-4;
    cfg.inner_iters = 10;
    cfg.baseline_hidden = Activation::tansig;
    cfg.baseline_output = Activation::softmax;
    cfg.baseline_alpha_w = 0.1;
    cfg.baseline_max_gradient = 1e-4;
    cfg.variants = {"adaptive", "frozen", "feedforward"};
    cfg.dataset = "activity";
    return cfg;
  }
  throw InputError("unknown experiment '" + name + "' (expected ex1, ex2a, ex2b or ex3)");
}

json to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["layers"] = cfg.layers;
  doc["head"] = std::string(to_string(cfg.head));
  doc["lambda"] = cfg.lambda;
  doc["initial_p"] = cfg.initial_p;
  doc["initial_p_output"] = cfg.initial_p_output ? json(*cfg.initial_p_output) : json(nullptr);
  doc["initial_w"] = "normal";
  doc["alpha_w"] = cfg.alpha_w;
  doc["alpha_p"] = cfg.alpha_p;
  doc["max_iters"] = cfg.max_iters;
  doc["max_error"] = cfg.max_error;
  doc["inner_iters"] = cfg.inner_iters;
  doc["baseline_hidden"] = std::string(to_string(cfg.baseline_hidden));
  doc["baseline_output"] = std::string(to_string(cfg.baseline_output));
  doc["baseline_initial_w"] = "nguyen-widrow";
  doc["baseline_alpha_w"] = cfg.baseline_alpha_w;
  doc["baseline_max_gradient"] = cfg.baseline_max_gradient;
  doc["baseline_max_iters"] = cfg.baseline_max_iters;
  doc["variants"] = cfg.variants;
  doc["dataset"] = cfg.dataset;
  doc["n_samples"] = cfg.n_samples;
  doc["range_lo"] = cfg.range_lo;
  doc["range_hi"] = cfg.range_hi;
  doc["grid_points"] = cfg.grid_points;
  doc["per_class"] = cfg.per_class;
  doc["train_per_class"] = cfg.train_per_class;
  doc["test_total"] = cfg.test_total;
  doc["data_seed"] = cfg.data_seed;
  doc["data_path"] = cfg.data_path;
  doc["repetitions"] = cfg.repetitions;
  doc["threads"] = cfg.threads;
  doc["seed"] = cfg.seed;
  return doc;
}

ExperimentConfig apply_json(ExperimentConfig cfg, const json& doc) {
  if (!doc.is_object()) throw InputError("config: expected a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "name") cfg.name = value.get<std::string>();
      else if (key == "layers") cfg.layers = value.get<std::vector<int>>();
      else if (key == "head") cfg.head = parse_task(value.get<std::string>());
      else if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "initial_p") cfg.initial_p = value.get<double>();
      else if (key == "initial_p_output") {
        cfg.initial_p_output = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      } else if (key == "initial_w") {
        if (value.get<std::string>() != "normal") throw InputError("config: initial_w supports only 'normal'");
      } else if (key == "alpha_w") cfg.alpha_w = value.get<double>();
      else if (key == "alpha_p") cfg.alpha_p = value.get<double>();
      else if (key == "max_iters") cfg.max_iters = value.get<int>();
      else if (key == "max_error") cfg.max_error = value.get<double>();
      else if (key == "inner_iters") cfg.inner_iters = value.get<int>();
      else if (key == "baseline_hidden") cfg.baseline_hidden = parse_activation(value.get<std::string>());
      else if (key == "baseline_output") cfg.baseline_output = parse_activation(value.get<std::string>());
      else if (key == "baseline_initial_w") {
        if (value.get<std::string>() != "nguyen-widrow") {
          throw InputError("config: baseline_initial_w supports only 'nguyen-widrow'");
        }
      } else if (key == "baseline_alpha_w") cfg.baseline_alpha_w = value.get<double>();
      else if (key == "baseline_max_gradient") cfg.baseline_max_gradient = value.get<double>();
      else if (key == "baseline_max_iters") cfg.baseline_max_iters = value.get<int>();
      else if (key == "variants") cfg.variants = value.get<std::vector<std::string>>();
      else if (key == "dataset") cfg.dataset = value.get<std::string>();
      else if (key == "n_samples") cfg.n_samples = value.get<int>();
      else if (key == "range_lo") cfg.range_lo = value.get<double>();
      else if (key == "range_hi") cfg.range_hi = value.get<double>();
      else if (key == "grid_points") cfg.grid_points = value.get<int>();
      else if (key == "per_class") cfg.per_class = value.get<int>();
      else if (key == "train_per_class") cfg.train_per_class = value.get<int>();
      else if (key == "test_total") cfg.test_total = value.get<int>();
      else if (key == "data_seed") cfg.data_seed = value.get<std::uint64_t>();
      else if (key == "data_path") cfg.data_path = value.get<std::string>();
      else if (key == "repetitions") cfg.repetitions = value.get<int>();
      else if (key == "threads") cfg.threads = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw InputError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig apply_override(ExperimentConfig base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return apply_json(std::move(base), json{{key, value}});
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ParseError("invalid JSON in " + path.string(), 0);
  return apply_json(std::move(base), doc);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.layers.size() < 2) throw InputError("config: layers needs the input size and at least one layer");
  if (cfg.repetitions < 1) throw InputError("config: repetitions must be >= 1");
  if (cfg.threads < 0) throw InputError("config: threads must be >= 0");
  if (cfg.variants.empty()) throw InputError("config: no variants to run");
  for (const auto& v : cfg.variants) {
    if (v != "adaptive" && v != "frozen" && v != "feedforward") throw InputError("config: unknown variant '" + v + "'");
  }
  const bool regression_data = cfg.dataset == "sign" || cfg.dataset == "square" || cfg.dataset == "abs";
  if (!regression_data && cfg.dataset != "activity" && cfg.dataset != "csv") {
    throw InputError("config: unknown dataset '" + cfg.dataset + "'");
  }
  if (regression_data && cfg.head != Task::regression) throw InputError("config: dataset needs a regression head");
  if (cfg.dataset == "activity" && cfg.head != Task::classification) {
    throw InputError("config: activity dataset needs a classification head");
  }
  if (cfg.dataset == "csv" && cfg.data_path.empty()) throw InputError("config: dataset 'csv' needs data_path");
  if (regression_data && (cfg.n_samples < 1 || cfg.grid_points < 2 || !(cfg.range_lo < cfg.range_hi))) {
    throw InputError("config: bad sampling settings");
  }
  validate(pnet_train_config(cfg, true));
  validate(baseline_train_config(cfg));
}

TrainConfig pnet_train_config(const ExperimentConfig& cfg, bool adaptive) {
  TrainConfig tc;
  tc.alpha_w = cfg.alpha_w;
  tc.alpha_p = adaptive ? cfg.alpha_p : 0.0;
  tc.max_iters = cfg.max_iters;
  tc.max_error = cfg.max_error;
  tc.max_gradient = 0.0;
  tc.inner_iters = cfg.inner_iters;
  tc.seed = cfg.seed;
  return tc;
}

TrainConfig baseline_train_config(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.alpha_w = cfg.baseline_alpha_w;
  tc.alpha_p = 0.0;
  tc.max_iters = cfg.baseline_max_iters;
  tc.max_error = 0.0;
  tc.max_gradient = cfg.baseline_max_gradient;
  tc.inner_iters = cfg.inner_iters;
  tc.seed = cfg.seed;
  return tc;
}

double target_function(const std::string& dataset, double x) {
  if (dataset == "sign") return static_cast<double>((x > 0.0) - (x < 0.0));
  if (dataset == "square") return x * x;
  if (dataset == "abs") return std::abs(x);
  throw InputError("no target function for dataset '" + dataset + "'");
}

Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.dataset == "sign") return gen_sign(cfg.n_samples, cfg.range_lo, cfg.range_hi, seed);
  if (cfg.dataset == "square") return gen_square(cfg.n_samples, seed);
  if (cfg.dataset == "abs") return gen_abs(cfg.n_samples, seed);
  if (cfg.dataset == "csv") return load_csv(std::filesystem::path(cfg.data_path));
  throw InputError("make_dataset: '" + cfg.dataset + "' is not a single-set recipe");
}

Dataset make_grid(const ExperimentConfig& cfg) {
  Dataset grid;
  grid.inputs.resize(cfg.grid_points, 1);
  grid.targets.resize(cfg.grid_points, 1);
  for (int i = 0; i < cfg.grid_points; ++i) {
    const double x = cfg.range_lo + (cfg.range_hi - cfg.range_lo) * i / (cfg.grid_points - 1);
    grid.inputs(i, 0) = x;
    grid.targets(i, 0) = target_function(cfg.dataset, x);
  }
  return grid;
}

std::vector<const RunRecord*> ExperimentResult::of(const std::string& variant) const {
  std::vector<const RunRecord*> out;
  for (const auto& run : runs) {
    if (run.variant == variant) out.push_back(&run);
  }
  return out;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation (n - 1); zero for a single value.
MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

double ExperimentResult::mean_train(const std::string& variant) const {
  std::vector<double> values;
  for (const auto* run : of(variant)) values.push_back(run->train_error);
  return mean_std(values).mean;
}

double ExperimentResult::mean_test(const std::string& variant) const {
  std::vector<double> values;
  for (const auto* run : of(variant)) values.push_back(run->test_error);
  return mean_std(values).mean;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                                std::ostream* progress) {
  validate(cfg);
  const bool classification = cfg.head == Task::classification;
  const bool has_grid = !classification && cfg.dataset != "csv";

  std::optional<Dataset> pool;
  if (cfg.dataset == "activity") pool = gen_activity_standin(cfg.per_class, cfg.data_seed);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir / "models");
    std::filesystem::create_directories(*out_dir / "data");
  }

  ExperimentResult result;
  std::ostringstream error_log;
  std::ostringstream p_log;
  std::ostringstream predictions;
  for (auto* s : {&error_log, &p_log, &predictions}) *s << std::setprecision(17);
  error_log << "iter,variant,seed,E\n";
  p_log << "iter,layer,neuron,p,variant,seed\n";
  predictions << "x,y_true,y_hat,variant,seed\n";

  const std::optional<Dataset> grid = has_grid ? std::optional<Dataset>(make_grid(cfg)) : std::nullopt;

  std::vector<std::pair<Dataset, Dataset>> splits;
  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    Dataset train_set;
    Dataset test_set;
    if (pool) {
      std::tie(train_set, test_set) = split_train_test(*pool, cfg.train_per_class, cfg.test_total, seed);
    } else {
      train_set = make_dataset(cfg, seed);
      test_set = grid ? *grid : train_set;
    }
    if (out_dir) {
      save_csv(train_set, *out_dir / "data" / ("train_" + std::to_string(seed) + ".csv"));
      save_csv(test_set, *out_dir / "data" / ("test_" + std::to_string(seed) + ".csv"));
    }
    splits.emplace_back(std::move(train_set), std::move(test_set));
  }

  // Every (repetition, variant) pair is an independent job; results land in
  // fixed slots so the outputs do not depend on the number of workers.
  const std::size_t n_variants = cfg.variants.size();
  const std::size_t n_jobs = splits.size() * n_variants;
  result.runs.resize(n_jobs);
  std::mutex progress_mutex;
  const auto run_job = [&](std::size_t job) {
    const std::size_t r = job / n_variants;
    const std::string& variant = cfg.variants[job % n_variants];
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    const Dataset& train_set = splits[r].first;
    const Dataset& test_set = splits[r].second;

    Network initial;
    TrainConfig tc;
    if (variant == "feedforward") {
      initial = nguyen_widrow_init(cfg.layers, cfg.head, cfg.baseline_hidden, cfg.baseline_output, seed);
      tc = baseline_train_config(cfg);
    } else {
      initial = init_network(cfg.layers, cfg.head, cfg.lambda, cfg.initial_p, seed, cfg.initial_p_output);
      tc = pnet_train_config(cfg, variant == "adaptive");
    }
    tc.seed = seed;
    auto trained = train(std::move(initial), train_set, tc);

    RunRecord& run = result.runs[job];
    run.variant = variant;
    run.seed = seed;
    run.net = std::move(trained.net);
    run.log = std::move(trained.log);
    if (classification) {
      run.train_error = classification_error(run.net, train_set);
      run.test_error = classification_error(run.net, test_set);
    } else {
      run.train_error = run.log.error.back();
      run.test_error = dataset_error(run.net, test_set);
    }
    if (progress) {
      const std::lock_guard lock(progress_mutex);
      *progress << cfg.name << " " << variant << " seed " << seed << ": iterations " << run.log.error.size()
                << ", train " << run.train_error << ", test " << run.test_error << std::endl;
    }
  };

  std::size_t workers = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                        : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n_jobs);
  if (workers <= 1) {
    for (std::size_t job = 0; job < n_jobs; ++job) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_jobs);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
          try {
            run_job(job);
          } catch (...) {
            errors[job] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const RunRecord& run : result.runs) {
    const std::string& variant = run.variant;
    const std::uint64_t seed = run.seed;
    for (std::size_t t = 0; t < run.log.error.size(); ++t) {
      error_log << t + 1 << ',' << variant << ',' << seed << ',' << run.log.error[t] << '\n';
      Eigen::Index flat = 0;
      for (std::size_t k = 0; k < run.net.layers.size(); ++k) {
        for (Eigen::Index j = 0; j < run.net.layers[k].p.size(); ++j, ++flat) {
          p_log << t + 1 << ',' << k + 1 << ',' << j + 1 << ',' << run.log.p[t][flat] << ',' << variant << ','
                << seed << '\n';
        }
      }
    }
    if (grid) {
      for (Eigen::Index i = 0; i < grid->size(); ++i) {
        const double y_hat = predict(run.net, grid->inputs.row(i).transpose())[0];
        predictions << grid->inputs(i, 0) << ',' << grid->targets(i, 0) << ',' << y_hat << ',' << variant << ','
                    << seed << '\n';
      }
    }
    if (out_dir) save_network(run.net, *out_dir / "models" / (variant + "_" + std::to_string(seed) + ".model"));
  }

  if (out_dir) {
    std::ostringstream summary;
    summary << std::setprecision(17) << "variant,seed,train_error,test_error\n";
    for (const auto& run : result.runs) {
      summary << run.variant << ',' << run.seed << ',' << run.train_error << ',' << run.test_error << '\n';
    }
    for (const auto& variant : cfg.variants) {
      std::vector<double> train_values;
      std::vector<double> test_values;
      for (const auto* run : result.of(variant)) {
        train_values.push_back(run->train_error);
        test_values.push_back(run->test_error);
      }
      const auto tr = mean_std(train_values);
      const auto te = mean_std(test_values);
      summary << variant << ",mean," << tr.mean << ',' << te.mean << '\n';
      summary << variant << ",std," << tr.std << ',' << te.std << '\n';
    }
    write_file(*out_dir / "summary.csv", summary.str());
    write_file(*out_dir / "error_log.csv", error_log.str());
    write_file(*out_dir / "p_evolution.csv", p_log.str());
    if (grid) write_file(*out_dir / "predictions.csv", predictions.str());
    std::ofstream cfg_out(*out_dir / "config.json");
    cfg_out << to_json(cfg).dump(2) << '\n';
  }
  return result;
}

}  // namespace pnet
