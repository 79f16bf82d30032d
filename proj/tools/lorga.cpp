#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lorga/analysis.hpp"
#include "lorga/data.hpp"
#include "lorga/ga_init.hpp"
#include "lorga/linalg.hpp"
#include "lorga/lora.hpp"
#include "lorga/nn.hpp"
#include "lorga/report.hpp"
#include "lorga/train.hpp"
#include "lorga/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lorga;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) ok = true;
    if (!ok) throw ConfigError("unknown field '" + it.key() + "' in " + ctx);
  }
}

template <typename T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for field '") + key + "'");
  }
}

struct StabilityConfig {
  std::vector<Index> d_out_grid = {64, 256, 1024};
  std::vector<Index> rank_grid = {2, 8, 32};
  Index d_in = 64;
  int samples = 10000;
  double alpha = 1.0;
  double gamma = 1.0;
  double constant_zeta = 1.0;
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  std::string experiment = "experiment";
  data::DatasetSpec dataset;
  nn::NetworkSpec network;
  std::vector<std::string> schemes = {"vanilla", "lora_ga"};
  train::TrainConfig train_cfg;
  ga_init::GaInitConfig ga;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "out";
  StabilityConfig stability;
};

data::DatasetSpec parse_dataset(const json& j) {
  check_keys(j, {"kind", "dims", "noise_sigma", "classes", "dim", "spread", "path",
                 "target_column", "n_samples", "seed"},
             "dataset");
  data::DatasetSpec spec;
  std::string kind = field<std::string>(j, "kind", "teacher_student");
  if (kind == "teacher_student") spec.kind = data::DatasetKind::TeacherStudent;
  else if (kind == "blobs") spec.kind = data::DatasetKind::Blobs;
  else if (kind == "csv") spec.kind = data::DatasetKind::Csv;
  else throw ConfigError("unknown dataset kind '" + kind + "'");
  spec.teacher_dims = field<std::vector<Index>>(j, "dims", spec.teacher_dims);
  spec.noise_sigma = field<double>(j, "noise_sigma", spec.noise_sigma);
  spec.classes = field<Index>(j, "classes", spec.classes);
  spec.dim = field<Index>(j, "dim", spec.dim);
  spec.spread = field<double>(j, "spread", spec.spread);
  spec.path = field<std::string>(j, "path", spec.path);
  spec.target_column = field<std::string>(j, "target_column", spec.target_column);
  spec.n_samples = field<Index>(j, "n_samples", spec.n_samples);
  spec.seed = field<std::uint64_t>(j, "seed", spec.seed);
  return spec;
}

nn::NetworkSpec parse_network(const json& j) {
  check_keys(j, {"layer_dims", "activation", "loss", "init_seed", "use_bias"}, "network");
  nn::NetworkSpec spec;
  spec.layer_dims = field<std::vector<Index>>(j, "layer_dims", {64, 64, 64});
  spec.activation =
      nn::activation_from_name(field<std::string>(j, "activation", "tanh"));
  spec.loss = nn::loss_from_name(field<std::string>(j, "loss", "mse"));
  spec.init_seed = field<std::uint64_t>(j, "init_seed", 7);
  spec.use_bias = field<bool>(j, "use_bias", false);
  return spec;
}

train::TrainConfig parse_train(const json& j) {
  check_keys(j, {"optimizer", "beta1", "beta2", "epsilon", "weight_decay",
                 "learning_rate", "warmup_ratio", "schedule", "steps", "batch_size",
                 "threshold", "trainable"},
             "train");
  train::TrainConfig cfg;
  std::string opt = field<std::string>(j, "optimizer", "adamw");
  if (opt == "sgd") cfg.optimizer = train::OptimizerKind::Sgd;
  else if (opt == "adamw") cfg.optimizer = train::OptimizerKind::AdamW;
  else throw ConfigError("unknown optimizer '" + opt + "'");
  cfg.beta1 = field<double>(j, "beta1", cfg.beta1);
  cfg.beta2 = field<double>(j, "beta2", cfg.beta2);
  cfg.epsilon = field<double>(j, "epsilon", cfg.epsilon);
  cfg.weight_decay = field<double>(j, "weight_decay", cfg.weight_decay);
  cfg.learning_rate = field<double>(j, "learning_rate", cfg.learning_rate);
  cfg.warmup_ratio = field<double>(j, "warmup_ratio", cfg.warmup_ratio);
  std::string sched = field<std::string>(j, "schedule", "cosine_with_warmup");
  if (sched == "constant") cfg.schedule = train::Schedule::Constant;
  else if (sched == "cosine_with_warmup") cfg.schedule = train::Schedule::CosineWithWarmup;
  else throw ConfigError("unknown schedule '" + sched + "'");
  cfg.steps = field<Index>(j, "steps", cfg.steps);
  cfg.batch_size = field<Index>(j, "batch_size", cfg.batch_size);
  cfg.threshold = field<double>(j, "threshold", cfg.threshold);
  std::string tr = field<std::string>(j, "trainable", "adapters_only");
  if (tr == "adapters_only") cfg.trainable = train::Trainable::AdaptersOnly;
  else if (tr == "full") cfg.trainable = train::Trainable::Full;
  else throw ConfigError("unknown trainable set '" + tr + "'");
  return cfg;
}

ga_init::GaInitConfig parse_ga(const json& j) {
  check_keys(j, {"rank", "alpha", "gamma", "sampled_batch_size", "micro_batch_size",
                 "seed", "exclude_layers"},
             "ga_init");
  ga_init::GaInitConfig cfg;
  cfg.rank = field<Index>(j, "rank", cfg.rank);
  cfg.alpha = field<double>(j, "alpha", cfg.alpha);
  cfg.gamma = field<double>(j, "gamma", cfg.gamma);
  cfg.sampled_batch_size = field<Index>(j, "sampled_batch_size", cfg.sampled_batch_size);
  cfg.micro_batch_size = field<Index>(j, "micro_batch_size", cfg.sampled_batch_size);
  cfg.seed = field<std::uint64_t>(j, "seed", cfg.seed);
  cfg.exclude_layers = field<std::vector<Index>>(j, "exclude_layers", {});
  return cfg;
}

StabilityConfig parse_stability(const json& j) {
  check_keys(j, {"d_out_grid", "rank_grid", "d_in", "samples", "alpha", "gamma",
                 "constant_zeta", "seed"},
             "stability");
  StabilityConfig cfg;
  cfg.d_out_grid = field<std::vector<Index>>(j, "d_out_grid", cfg.d_out_grid);
  cfg.rank_grid = field<std::vector<Index>>(j, "rank_grid", cfg.rank_grid);
  cfg.d_in = field<Index>(j, "d_in", cfg.d_in);
  cfg.samples = field<int>(j, "samples", cfg.samples);
  cfg.alpha = field<double>(j, "alpha", cfg.alpha);
  cfg.gamma = field<double>(j, "gamma", cfg.gamma);
  cfg.constant_zeta = field<double>(j, "constant_zeta", cfg.constant_zeta);
  cfg.seed = field<std::uint64_t>(j, "seed", cfg.seed);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config parse failure in " + path + ": " + e.what());
  }
  check_keys(j, {"experiment", "dataset", "network", "schemes", "train", "ga_init",
                 "seeds", "output_dir", "stability"},
             path);
  ExperimentConfig cfg;
  cfg.experiment = field<std::string>(j, "experiment", cfg.experiment);
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j["dataset"]);
  if (j.contains("network")) cfg.network = parse_network(j["network"]);
  cfg.schemes = field<std::vector<std::string>>(j, "schemes", cfg.schemes);
  if (cfg.schemes.empty()) throw ConfigError("schemes list must be non-empty");
  if (j.contains("train")) cfg.train_cfg = parse_train(j["train"]);
  if (j.contains("ga_init")) cfg.ga = parse_ga(j["ga_init"]);
  cfg.seeds = field<std::vector<std::uint64_t>>(j, "seeds", cfg.seeds);
  cfg.output_dir = field<std::string>(j, "output_dir", cfg.output_dir);
  if (j.contains("stability")) cfg.stability = parse_stability(j["stability"]);

  if (const char* env = std::getenv("LORGA_SEED")) {
    const auto s = static_cast<std::uint64_t>(std::stoull(env));
    cfg.dataset.seed = s;
    cfg.ga.seed = s;
  }
  return cfg;
}

// Samples the batch used for gradient estimation, seeded by the GA config.
std::pair<Matrix, Matrix> sample_batch(const data::Dataset& ds, Index count,
                                       std::uint64_t seed) {
  count = std::min(count, ds.inputs.cols());
  auto rng = linalg::make_rng(seed ^ 0x5a11ced0ull);
  std::vector<Index> order(static_cast<std::size_t>(ds.inputs.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Matrix x(ds.inputs.rows(), count), t(ds.targets.rows(), count);
  for (Index j = 0; j < count; ++j) {
    x.col(j) = ds.inputs.col(order[static_cast<std::size_t>(j)]);
    t.col(j) = ds.targets.col(order[static_cast<std::size_t>(j)]);
  }
  return {x, t};
}

// Builds the network for one scheme. "full" returns the base network.
nn::Network prepare_network(const ExperimentConfig& cfg, const std::string& scheme,
                            const data::Dataset& train_set) {
  nn::Network net = nn::Network::create(cfg.network);
  if (scheme == "full") return net;

  lora::SchemeKind kind = lora::scheme_from_name(scheme);
  auto [bx, bt] = sample_batch(train_set, cfg.ga.sampled_batch_size, cfg.ga.seed);

  if (kind == lora::SchemeKind::LoraGa) {
    ga_init::lora_ga_initialize(net, cfg.ga, bx, bt);
    return net;
  }

  nn::GradientSnapshot grads;
  if (kind == lora::SchemeKind::GradApprox)
    grads = ga_init::estimate_gradients_accumulated(net, bx, bt, cfg.ga.micro_batch_size);

  for (Index l = 0; l < net.layer_count(); ++l) {
    lora::InitScheme scheme_cfg;
    scheme_cfg.kind = kind;
    scheme_cfg.alpha = cfg.ga.alpha;
    scheme_cfg.rank = cfg.ga.rank;
    if (kind == lora::SchemeKind::GaussianSo) scheme_cfg.gamma = cfg.ga.gamma;
    if (kind == lora::SchemeKind::LoraGa) scheme_cfg.gamma = cfg.ga.gamma;
    scheme_cfg.seed = cfg.ga.seed + 977 * static_cast<std::uint64_t>(l + 1);
    const Matrix* grad = kind == lora::SchemeKind::GradApprox
                             ? &grads.dw[static_cast<std::size_t>(l)]
                             : nullptr;
    const auto& layer = net.layers()[static_cast<std::size_t>(l)];
    net.attach_adapter(l, lora::initialize(layer.w, scheme_cfg, grad));
  }
  return net;
}

struct RunResult {
  std::string scheme;
  std::uint64_t seed = 0;
  train::MetricsLog log;
  double eval_loss = std::numeric_limits<double>::quiet_NaN();
};

RunResult run_one(const ExperimentConfig& cfg, const std::string& scheme,
                  std::uint64_t seed, const data::Dataset& train_set,
                  const data::Dataset& eval_set) {
  RunResult res;
  res.scheme = scheme;
  res.seed = seed;
  nn::Network net = prepare_network(cfg, scheme, train_set);
  train::TrainConfig tc = cfg.train_cfg;
  tc.seed = seed;
  tc.trainable = scheme == "full" ? train::Trainable::Full : cfg.train_cfg.trainable;
  res.log = train::run_training(net, train_set.inputs, train_set.targets, tc);
  if (!res.log.diverged) {
    Matrix pred = net.predict(eval_set.inputs);
    res.eval_loss = nn::loss_value(cfg.network.loss, pred, eval_set.targets);
  }
  return res;
}

std::vector<RunResult> run_all(const ExperimentConfig& cfg,
                               const std::vector<std::string>& schemes, int jobs) {
  data::Dataset full = data::generate(cfg.dataset);
  auto [train_set, eval_set] = data::split(full, 0.8, 0.2, cfg.dataset.seed + 1);

  struct Task {
    std::string scheme;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& scheme : schemes)
    for (std::uint64_t seed : cfg.seeds) tasks.push_back({scheme, seed});

  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::string first_error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_one(cfg, tasks[i].scheme, tasks[i].seed, train_set, eval_set);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error.empty()) first_error = e.what();
        results[i].scheme = tasks[i].scheme;
        results[i].seed = tasks[i].seed;
        results[i].log.diverged = true;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (!first_error.empty())
    std::cerr << "warning: at least one run failed: " << first_error << "\n";
  return results;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json summarize_scheme(const std::vector<RunResult>& results, const std::string& scheme) {
  json per_seed = json::array();
  std::vector<double> steps, finals, evals;
  for (const auto& r : results) {
    if (r.scheme != scheme) continue;
    json js;
    js["seed"] = r.seed;
    js["diverged"] = r.log.diverged;
    if (r.log.diverged) {
      js["status"] = "DIVERGED";
    } else {
      js["final_loss"] = r.log.final_loss;
      js["eval_loss"] = r.eval_loss;
      finals.push_back(r.log.final_loss);
      evals.push_back(r.eval_loss);
      if (r.log.steps_to_threshold) {
        js["steps_to_threshold"] = *r.log.steps_to_threshold;
        steps.push_back(static_cast<double>(*r.log.steps_to_threshold));
      }
    }
    per_seed.push_back(js);
  }
  json out;
  out["scheme"] = scheme;
  out["runs"] = per_seed;
  out["median_final_loss"] = median(finals);
  out["median_eval_loss"] = median(evals);
  if (!steps.empty()) out["median_steps_to_threshold"] = median(steps);
  return out;
}

int cmd_init_analyze(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  data::Dataset ds = data::generate(cfg.dataset);
  nn::Network net = nn::Network::create(cfg.network);
  auto [bx, bt] = sample_batch(ds, cfg.ga.sampled_batch_size, cfg.ga.seed);

  nn::GradientSnapshot grads =
      ga_init::estimate_gradients_accumulated(net, bx, bt, cfg.ga.micro_batch_size);
  nn::Network adapted = net;
  ga_init::InitReport report = ga_init::lora_ga_initialize(adapted, cfg.ga, bx, bt);

  json jrep;
  jrep["seed"] = report.seed;
  jrep["sampled_batch_size"] = report.sampled_batch_size;
  jrep["micro_batch_size"] = report.micro_batch_size;
  json jlayers = json::array();
  for (const auto& lr : report.layers) {
    const Matrix& grad = grads.dw[static_cast<std::size_t>(lr.layer)];
    const std::string stem = cfg.output_dir + "/layer" + std::to_string(lr.layer);
    io::save_csv(grad, stem + "_grad_heatmap.csv");

    analysis::CoverageCurve curve = analysis::coverage_curve(linalg::svd(grad).s);
    std::vector<double> idx(curve.singular_values.size());
    std::iota(idx.begin(), idx.end(), 1.0);
    report::write_two_column_csv(stem + "_spectrum.csv", "index", "sigma", idx,
                                 curve.singular_values);
    report::write_two_column_csv(stem + "_coverage.csv", "k", "coverage", idx,
                                 curve.cumulative);
    report::Series spec_series{"sigma", {}}, cov_series{"coverage", {}};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      spec_series.points.emplace_back(idx[i], curve.singular_values[i]);
      cov_series.points.emplace_back(idx[i], curve.cumulative[i]);
    }
    report::write_svg_lines(stem + "_spectrum.svg",
                            "singular values, layer " + std::to_string(lr.layer),
                            {spec_series});
    report::write_svg_lines(stem + "_coverage.svg",
                            "spectrum coverage, layer " + std::to_string(lr.layer),
                            {cov_series});

    json jl;
    jl["layer"] = lr.layer;
    jl["d_in"] = lr.d_in;
    jl["d_out"] = lr.d_out;
    jl["r"] = lr.rank;
    jl["eta"] = lr.eta;
    jl["gamma"] = lr.gamma;
    jl["zeta"] = lr.zeta;
    jl["singular_values"] = lr.singular_values;
    jl["coverage_2r"] = lr.coverage_2r;
    jl["criterion_residual"] = lr.criterion_residual;
    jl["predicted_residual"] = lr.predicted_residual;
    jlayers.push_back(jl);
  }
  jrep["layers"] = jlayers;
  report::write_json(jrep, cfg.output_dir + "/init_report.json");
  std::cout << "wrote init analysis for " << report.layers.size() << " layers to "
            << cfg.output_dir << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, int jobs) {
  auto results = run_all(cfg, cfg.schemes, jobs);
  json summary;
  summary["experiment"] = cfg.experiment;
  summary["threshold"] = cfg.train_cfg.threshold;
  summary["smoothing_window"] = 10;
  json schemes = json::array();
  for (const auto& scheme : cfg.schemes) {
    for (const auto& r : results) {
      if (r.scheme != scheme) continue;
      fs::create_directories(cfg.output_dir + "/" + scheme);
      report::write_metrics_csv(r.log, cfg.output_dir + "/" + scheme + "/" +
                                           std::to_string(r.seed) + ".csv");
    }
    schemes.push_back(summarize_scheme(results, scheme));
  }
  summary["schemes"] = schemes;

  auto median_steps = [&](const std::string& scheme) -> double {
    for (const auto& s : schemes)
      if (s["scheme"] == scheme && s.contains("median_steps_to_threshold"))
        return s["median_steps_to_threshold"].get<double>();
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double vanilla_steps = median_steps("vanilla");
  const double ga_steps = median_steps("lora_ga");
  if (std::isfinite(vanilla_steps) && std::isfinite(ga_steps) && ga_steps > 0)
    summary["speedup_vanilla_over_lora_ga"] = vanilla_steps / ga_steps;

  // Loss curves of the first seed per scheme.
  std::vector<report::Series> curves;
  for (const auto& scheme : cfg.schemes)
    for (const auto& r : results)
      if (r.scheme == scheme && r.seed == cfg.seeds.front() && !r.log.diverged) {
        report::Series s{scheme, {}};
        for (const auto& rec : r.log.records)
          s.points.emplace_back(static_cast<double>(rec.step), rec.loss);
        curves.push_back(std::move(s));
      }
  if (!curves.empty())
    report::write_svg_lines(cfg.output_dir + "/loss_curves.svg", "training loss",
                            curves, true);

  fs::create_directories(cfg.output_dir);
  report::write_json(summary, cfg.output_dir + "/summary.json");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, int jobs) {
  std::vector<std::string> schemes = {"vanilla",       "gaussian", "gaussian_so",
                                      "grad_approx_ga", "lora_ga",  "full"};
  ExperimentConfig local = cfg;
  local.schemes = schemes;
  auto results = run_all(local, schemes, jobs);

  json table = json::array();
  for (const auto& scheme : schemes) table.push_back(summarize_scheme(results, scheme));
  json out;
  out["experiment"] = cfg.experiment;
  out["table"] = table;
  fs::create_directories(cfg.output_dir);
  report::write_json(out, cfg.output_dir + "/ablation.json");

  std::ofstream csv(cfg.output_dir + "/ablation.csv");
  csv.precision(17);
  csv << "scheme,median_eval_loss,median_steps_to_threshold,diverged_runs\n";
  for (const auto& row : table) {
    int diverged = 0;
    for (const auto& r : row["runs"])
      if (r["diverged"].get<bool>()) ++diverged;
    csv << row["scheme"].get<std::string>() << ","
        << row["median_eval_loss"].get<double>() << ",";
    if (row.contains("median_steps_to_threshold"))
      csv << row["median_steps_to_threshold"].get<double>();
    else
      csv << "NA";
    csv << "," << diverged << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_stability(const ExperimentConfig& cfg) {
  analysis::StabilityProbeConfig pc;
  for (Index d_out : cfg.stability.d_out_grid)
    for (Index r : cfg.stability.rank_grid)
      pc.grid.push_back({cfg.stability.d_in, d_out, r});
  pc.samples = cfg.stability.samples;
  pc.seed = cfg.stability.seed;
  pc.alpha = cfg.stability.alpha;
  pc.gamma = cfg.stability.gamma;
  pc.constant_zeta = cfg.stability.constant_zeta;

  fs::create_directories(cfg.output_dir);
  json out;
  for (auto [rule, name] : {std::pair{analysis::ZetaRule::LoraGa, "lora_ga"},
                            std::pair{analysis::ZetaRule::Constant, "constant"}}) {
    auto cells = analysis::stability_probe(pc, rule);
    json jcells = json::array();
    std::ofstream csv(cfg.output_dir + "/stability_" + std::string(name) + ".csv");
    csv.precision(17);
    csv << "d_in,d_out,rank,zeta,measured_forward,predicted_forward,"
           "measured_backward,predicted_backward,skipped\n";
    for (const auto& c : cells) {
      csv << c.d_in << "," << c.d_out << "," << c.rank << "," << c.zeta << ","
          << c.measured_forward << "," << c.predicted_forward << ","
          << c.measured_backward << "," << c.predicted_backward << "," << c.skipped
          << "\n";
      json jc;
      jc["d_in"] = c.d_in;
      jc["d_out"] = c.d_out;
      jc["rank"] = c.rank;
      jc["zeta"] = c.zeta;
      jc["measured_forward"] = c.measured_forward;
      jc["predicted_forward"] = c.predicted_forward;
      jc["measured_backward"] = c.measured_backward;
      jc["predicted_backward"] = c.predicted_backward;
      jc["skipped"] = c.skipped;
      jcells.push_back(jc);
    }
    out[name] = jcells;
  }
  report::write_json(out, cfg.output_dir + "/stability.json");
  std::cout << "wrote stability tables to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_verify() {
  auto checks = verify::run_verification();
  bool all_pass = true;
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
              << "  measured=" << c.measured << " bound=" << c.predicted << "  ("
              << c.detail << ")\n";
  }
  std::cout << (all_pass ? "all checks passed" : "verification FAILED") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoRA gradient-approximation initialization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string seeds_override;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON experiment config");
    if (needs_config) opt->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--seeds", seeds_override, "comma-separated seed list override");
    sub->add_option("--jobs", jobs, "parallel worker count");
  };

  auto* init_analyze = app.add_subcommand("init-analyze", "gradient spectra and coverage");
  add_common(init_analyze, true);
  auto* train_cmd = app.add_subcommand("train", "train the configured schemes");
  add_common(train_cmd, true);
  auto* ablate = app.add_subcommand("ablate", "all five schemes plus full fine-tune");
  add_common(ablate, true);
  auto* stability = app.add_subcommand("stability", "second-moment scaling sweeps");
  add_common(stability, false);
  app.add_subcommand("verify", "run the built-in verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("verify")) return cmd_verify();

    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (!seeds_override.empty()) {
      cfg.seeds.clear();
      std::stringstream ss(seeds_override);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
      if (cfg.seeds.empty()) throw ConfigError("empty --seeds list");
    }

    if (app.got_subcommand("init-analyze")) return cmd_init_analyze(cfg);
    if (app.got_subcommand("train")) return cmd_train(cfg, jobs);
    if (app.got_subcommand("ablate")) return cmd_ablate(cfg, jobs);
    if (app.got_subcommand("stability")) return cmd_stability(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
