#include "msk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "msk/krr.hpp"
#include "msk/rng.hpp"

namespace msk {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file '" + path.string() + "' cannot be opened");
  ExperimentConfig cfg;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw ConfigError("config file must hold a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object() || value.is_array()) {
        throw ConfigError("config field '" + key + "' must be a scalar");
      }
    }
    cfg.data_ = std::move(j);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  return cfg;
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config to '" + path.string() + "'");
  out << data_.dump(2) << "\n";
}

Dataset sample_sphere(int d, int n, std::uint64_t seed) {
  if (d < 2) throw InputError("sample_sphere: d must be >= 2");
  if (n < 1) throw InputError("sample_sphere: n must be >= 1");
  rng::Stream stream(rng::mix(rng::hash_string("sample-sphere"), seed));
  Dataset data;
  data.points = Matrix(n, d);
  data.labels = Vector::Zero(n);
  data.generator = "uniform_sphere";
  data.seed = seed;
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) data.points(i, j) = stream.normal();
      norm2 = data.points.row(i).squaredNorm();
    } while (norm2 < 1e-24);
    data.points.row(i) /= std::sqrt(norm2);
  }
  return data;
}

Vector fourier_labels(const Dataset& data, int k) {
  if (data.dim() != 2) throw InputError("fourier_labels: points must lie on S^1 (d=2)");
  Vector y(data.n());
  for (int i = 0; i < data.n(); ++i) {
    y(i) = std::sin(k * std::atan2(data.points(i, 1), data.points(i, 0)));
  }
  return y;
}

SpectrumMap parse_spectrum_map(const std::string& name) {
  if (name == "identity") return SpectrumMap::identity();
  auto tail_number = [&](const std::string& prefix) {
    std::string s = name.substr(prefix.size());
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("cannot parse spectrum map '" + name + "'");
    }
  };
  if (name.rfind("power_", 0) == 0) return SpectrumMap::power(tail_number("power_"));
  if (name.rfind("shift_", 0) == 0) return SpectrumMap::shift(tail_number("shift_"));
  if (name.rfind("flatten_", 0) == 0) {
    return SpectrumMap::flatten_top_k(static_cast<int>(tail_number("flatten_")));
  }
  throw ConfigError("unknown spectrum map '" + name +
                    "' (expected identity | power_<a> | shift_<g> | flatten_<k>)");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);  // binary: exact '\n' endings
  if (!out) throw InputError("write_csv: cannot open " + path.string());
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
}

void write_metadata(const std::filesystem::path& dir, const ExperimentConfig& resolved) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "metadata.json", std::ios::binary);
  if (!out) throw InputError("write_metadata: cannot open " + (dir / "metadata.json").string());
  out << resolved.dump() << "\n";
}

// ---------------------------------------------------------------------------
// freq-sweep

std::vector<FreqSweepRow> freq_sweep(const FreqSweepConfig& cfg) {
  if (cfg.freqs.empty() || cfg.arms.empty() || cfg.seeds < 1) {
    throw ConfigError("freq-sweep: freqs, arms, seeds must be nonempty");
  }
  for (const auto& arm : cfg.arms) {
    if (arm != "identity" && arm != "ntk" && arm != "empirical_ntk") {
      throw ConfigError("freq-sweep: unknown arm '" + arm + "'");
    }
  }
  const int nf = static_cast<int>(cfg.freqs.size());
  const int na = static_cast<int>(cfg.arms.size());
  const int cells = nf * na * cfg.seeds;
  std::vector<FreqSweepRow> rows(cells);

#pragma omp parallel for schedule(dynamic)
  for (int cell = 0; cell < cells; ++cell) {
    const int fi = cell / (na * cfg.seeds);
    const int ai = (cell / cfg.seeds) % na;
    const int si = cell % cfg.seeds;
    const int freq = cfg.freqs[fi];
    const std::string& arm = cfg.arms[ai];

    Dataset data = sample_sphere(2, cfg.n, rng::mix(cfg.seed, rng::mix(rng::hash_string("data"), si)));
    Vector y = fourier_labels(data, freq);

    MlpConfig net_cfg;
    net_cfg.input_dim = 2;
    net_cfg.depth = cfg.depth;
    net_cfg.width = cfg.width;
    net_cfg.activation = Activation::relu;
    net_cfg.bias_scale = cfg.beta;
    net_cfg.last_layer_scale = cfg.nu;
    net_cfg.seed = rng::mix(cfg.seed, rng::mix(rng::hash_string("net"), si));
    MlpState net = mlp_init(net_cfg);

    FreqSweepRow row;
    row.frequency = freq;
    row.arm = arm;
    row.seed = si;

    try {
      Preconditioner S = Preconditioner::identity(cfg.n);
      Vector lr_spectrum;
      TrainOptions opts;
      opts.eps = cfg.eps;
      opts.max_iter = cfg.max_iter;
      opts.center_at_init = cfg.centered;
      opts.sgd_batch = cfg.sgd_batch;
      opts.sgd_schedule_seed = net_cfg.seed;

      if (arm == "identity") {
        NtkReluKernel kern{cfg.depth, cfg.beta};
        SpectralDecomposition d =
            clamp_floor(eigh(kernel_matrix(KernelSpec{kern}, data, Normalization::none)));
        lr_spectrum = d.eigenvalues;
      } else {
        SpectrumMap g = SpectrumMap::flatten_top_k(cfg.flatten_k);
        SpectralDecomposition d;
        if (arm == "ntk") {
          NtkReluKernel kern{cfg.depth, cfg.beta};
          d = clamp_floor(eigh(kernel_matrix(KernelSpec{kern}, data, Normalization::none)));
        } else {
          d = clamp_floor(eigh(empirical_ntk(net, data.points)));
          if (cfg.refresh_every > 0) {
            opts.refresh = PrecondRefresh{g, cfg.flatten_k, cfg.refresh_every};
          }
        }
        S = build_preconditioner(d, g, cfg.flatten_k);
        lr_spectrum = ks_spectrum(d, g, cfg.flatten_k);
      }
      double eta0 = cfg.eta0_safety * max_stable_lr(lr_spectrum);

      auto [trained, trace] = pgd_train(net, data.points, y, S, eta0, opts);
      (void)trained;
      if (trace.iterations_to_threshold) {
        row.iterations = *trace.iterations_to_threshold;
        row.status = "ok";
      } else {
        row.iterations = cfg.max_iter;
        row.status = "cap";
      }
      double rn = trace.residual_norms.back();
      row.final_loss = rn * rn / cfg.n;
    } catch (const DivergenceError& e) {
      row.iterations = e.iteration;
      row.final_loss = kNan;
      row.status = "diverged";
    }
    rows[cell] = std::move(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// variance-sweep

std::vector<VarianceSweepRow> variance_sweep(const VarianceSweepConfig& cfg) {
  if (cfg.trials < 1 || cfg.test_points < 1) {
    throw ConfigError("variance-sweep: trials and test_points must be >= 1");
  }
  KernelSpec kernel = LaplaceKernel{cfg.bandwidth};
  std::vector<VarianceSweepRow> rows;
  for (int n : cfg.sizes) {
    for (const auto& map_name : cfg.maps) {
      SpectrumMap g = parse_spectrum_map(map_name);
      double mse_sum = 0.0;
      for (int trial = 0; trial < cfg.trials; ++trial) {
        std::uint64_t tkey = rng::mix(cfg.seed, rng::mix(static_cast<std::uint64_t>(n), trial));
        Dataset train = sample_sphere(cfg.dim, n, rng::mix(tkey, rng::hash_string("train")));
        rng::Stream label_stream(rng::mix(tkey, rng::hash_string("labels")));
        for (int i = 0; i < n; ++i) train.labels(i) = label_stream.normal();
        Dataset test = sample_sphere(cfg.dim, cfg.test_points, rng::mix(tkey, rng::hash_string("test")));
        Vector pred = msk_predict(kernel, train, test.points, g, 0.0, PredictMode::exact_joint);
        mse_sum += pred.squaredNorm() / cfg.test_points;  // target is identically zero
      }
      rows.push_back(VarianceSweepRow{n, map_name, mse_sum / cfg.trials, cfg.trials});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// msk-verify

std::vector<ConsistencyRow> msk_verify(const MskVerifyConfig& cfg) {
  MercerCircleKernel kern = MercerCircleKernel::default_spectrum(cfg.truncation);
  SpectrumMap g = parse_spectrum_map(cfg.map);
  std::vector<std::uint64_t> seeds(cfg.seeds);
  for (int i = 0; i < cfg.seeds; ++i) seeds[i] = rng::mix(cfg.seed, i);
  return msk_consistency_sweep(kern, g, cfg.sizes, seeds);
}

// ---------------------------------------------------------------------------
// ntk-check

std::vector<NtkCheckRow> ntk_check(const NtkCheckConfig& cfg) {
  Dataset data = sample_sphere(2, cfg.n, rng::mix(cfg.seed, rng::hash_string("data")));
  NtkReluKernel kern{cfg.depth, cfg.beta};
  Matrix analytic = kernel_matrix(KernelSpec{kern}, data, Normalization::none).dense();
  double analytic_norm = analytic.norm();

  std::vector<NtkCheckRow> rows;
  for (int width : cfg.widths) {
    double gap_sum = 0.0;
    for (int si = 0; si < cfg.seeds; ++si) {
      MlpConfig net_cfg;
      net_cfg.input_dim = 2;
      net_cfg.depth = cfg.depth;
      net_cfg.width = width;
      net_cfg.activation = Activation::relu;
      net_cfg.bias_scale = cfg.beta;
      net_cfg.last_layer_scale = cfg.nu;
      net_cfg.seed = rng::mix(cfg.seed, rng::mix(rng::hash_string("net"),
                                                 rng::mix(width, si)));
      SymMatrix K0 = empirical_ntk_at_init(net_cfg, data.points);
      gap_sum += (K0.dense() - analytic).norm() / analytic_norm;
    }
    rows.push_back(NtkCheckRow{width, gap_sum / cfg.seeds, cfg.seeds});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  // "1..6" or "1,2,3"
  std::vector<int> out;
  auto range_pos = text.find("..");
  try {
    if (range_pos != std::string::npos) {
      int lo = std::stoi(text.substr(0, range_pos));
      int hi = std::stoi(text.substr(range_pos + 2));
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
      }
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot parse integer list '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty integer list '" + text + "'");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += v[i];
  }
  return s;
}

}  // namespace

int cli_main(int argc, char** argv) {
  // --config is honored before flag parsing so explicit flags override it.
  ExperimentConfig file_cfg;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      file_cfg = ExperimentConfig::load(argv[i + 1]);
    }
  }

  CLI::App app{"Modified-spectrum-kernel preconditioning experiments"};
  app.require_subcommand(1);
  std::string out_dir = file_cfg.get<std::string>("out", "out");
  std::uint64_t seed = file_cfg.get<std::uint64_t>("seed", 0);
  std::string config_path;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--config", config_path, "JSON config file (flat key/value)");

  // freq-sweep
  auto* fs = app.add_subcommand("freq-sweep", "iterations-to-learn vs target frequency");
  std::string fs_freqs = file_cfg.get<std::string>("freqs", "1..12");
  std::string fs_arms = file_cfg.get<std::string>("arms", "identity,ntk,empirical_ntk");
  FreqSweepConfig fscfg;
  fscfg.seeds = file_cfg.get<int>("seeds", fscfg.seeds);
  fscfg.n = file_cfg.get<int>("n", fscfg.n);
  fscfg.width = file_cfg.get<int>("width", fscfg.width);
  fscfg.depth = file_cfg.get<int>("depth", fscfg.depth);
  fscfg.eps = file_cfg.get<double>("eps", fscfg.eps);
  fscfg.max_iter = file_cfg.get<int>("max_iter", fscfg.max_iter);
  fscfg.flatten_k = file_cfg.get<int>("flatten_k", fscfg.flatten_k);
  fscfg.nu = file_cfg.get<double>("nu", fscfg.nu);
  fscfg.beta = file_cfg.get<double>("beta", fscfg.beta);
  fscfg.centered = file_cfg.get<bool>("centered", fscfg.centered);
  fscfg.sgd_batch = file_cfg.get<int>("sgd_batch", fscfg.sgd_batch);
  fscfg.refresh_every = file_cfg.get<int>("refresh_every", fscfg.refresh_every);
  fs->add_option("--freqs", fs_freqs, "frequencies, e.g. 1..12 or 1,3,5");
  fs->add_option("--arms", fs_arms, "identity,ntk,empirical_ntk");
  fs->add_option("--seeds", fscfg.seeds, "number of seeds");
  fs->add_option("--n", fscfg.n, "training points");
  fs->add_option("--width", fscfg.width, "hidden width");
  fs->add_option("--depth", fscfg.depth, "hidden layers");
  fs->add_option("--eps", fscfg.eps, "residual-norm stopping threshold");
  fs->add_option("--max-iter", fscfg.max_iter, "iteration cap");
  fs->add_option("--flatten-k", fscfg.flatten_k, "modified directions");
  fs->add_option("--nu", fscfg.nu, "last-layer variance scale");
  fs->add_option("--beta", fscfg.beta, "bias scale");
  fs->add_flag("--centered,!--no-centered", fscfg.centered, "subtract initial outputs");
  fs->add_option("--sgd-batch", fscfg.sgd_batch, "SGD batch size (0 = full batch)");
  fs->add_option("--refresh-every", fscfg.refresh_every,
                 "empirical-kernel rebuild period (0 = never)");

  // variance-sweep
  auto* vs = app.add_subcommand("variance-sweep", "noise-fitting variance of remapped kernels");
  std::string vs_sizes = file_cfg.get<std::string>("sizes", "64,128,256");
  std::string vs_maps = file_cfg.get<std::string>("maps", "identity,power_0.5,shift_0.1");
  VarianceSweepConfig vscfg;
  vscfg.trials = file_cfg.get<int>("trials", vscfg.trials);
  vscfg.test_points = file_cfg.get<int>("test_points", vscfg.test_points);
  vscfg.bandwidth = file_cfg.get<double>("bandwidth", vscfg.bandwidth);
  vscfg.dim = file_cfg.get<int>("dim", vscfg.dim);
  vs->add_option("--sizes", vs_sizes, "training-set sizes");
  vs->add_option("--maps", vs_maps, "spectrum maps");
  vs->add_option("--trials", vscfg.trials, "trials per cell");
  vs->add_option("--test-points", vscfg.test_points, "held-out points per trial");
  vs->add_option("--bandwidth", vscfg.bandwidth, "Laplace bandwidth");
  vs->add_option("--dim", vscfg.dim, "ambient dimension (points on S^{dim-1})");

  // msk-verify
  auto* mv = app.add_subcommand("msk-verify", "remapped-kernel consistency sweep");
  std::string mv_sizes = file_cfg.get<std::string>("sizes", "64,128,256,512");
  MskVerifyConfig mvcfg;
  mvcfg.seeds = file_cfg.get<int>("seeds", mvcfg.seeds);
  mvcfg.truncation = file_cfg.get<int>("truncation", mvcfg.truncation);
  mvcfg.map = file_cfg.get<std::string>("map", mvcfg.map);
  mv->add_option("--sizes", mv_sizes, "sample sizes");
  mv->add_option("--seeds", mvcfg.seeds, "seeds per size");
  mv->add_option("--truncation", mvcfg.truncation, "circle-kernel truncation R");
  mv->add_option("--map", mvcfg.map, "spectrum map");

  // ntk-check
  auto* nc = app.add_subcommand("ntk-check", "empirical vs analytic tangent kernel");
  std::string nc_widths = file_cfg.get<std::string>("widths", "256,1024,4096");
  NtkCheckConfig nccfg;
  nccfg.seeds = file_cfg.get<int>("seeds", nccfg.seeds);
  nccfg.n = file_cfg.get<int>("n", nccfg.n);
  nccfg.depth = file_cfg.get<int>("depth", nccfg.depth);
  nccfg.beta = file_cfg.get<double>("beta", nccfg.beta);
  nccfg.nu = file_cfg.get<double>("nu", nccfg.nu);
  nc->add_option("--widths", nc_widths, "widths to sweep");
  nc->add_option("--seeds", nccfg.seeds, "seeds per width");
  nc->add_option("--n", nccfg.n, "points");
  nc->add_option("--depth", nccfg.depth, "hidden layers");
  nc->add_option("--beta", nccfg.beta, "bias scale");
  nc->add_option("--nu", nccfg.nu, "last-layer variance scale");

  // pgd-train
  auto* pt = app.add_subcommand("pgd-train", "single preconditioned training run");
  struct {
    int n = 32, freq = 3, width = 1024, depth = 2, k = 8, max_iter = 2000;
    double eps = 1e-2, nu = 2.0, beta = 0.0, eta0 = 0.0;
    std::string map = "flatten_8";
    bool centered = true;
  } ptc;
  ptc.n = file_cfg.get<int>("n", ptc.n);
  ptc.freq = file_cfg.get<int>("freq", ptc.freq);
  ptc.width = file_cfg.get<int>("width", ptc.width);
  ptc.depth = file_cfg.get<int>("depth", ptc.depth);
  ptc.k = file_cfg.get<int>("k", ptc.k);
  ptc.max_iter = file_cfg.get<int>("max_iter", ptc.max_iter);
  ptc.eps = file_cfg.get<double>("eps", ptc.eps);
  ptc.nu = file_cfg.get<double>("nu", ptc.nu);
  ptc.beta = file_cfg.get<double>("beta", ptc.beta);
  ptc.map = file_cfg.get<std::string>("map", ptc.map);
  ptc.centered = file_cfg.get<bool>("centered", ptc.centered);
  pt->add_option("--n", ptc.n, "training points");
  pt->add_option("--freq", ptc.freq, "target frequency");
  pt->add_option("--width", ptc.width, "hidden width");
  pt->add_option("--depth", ptc.depth, "hidden layers");
  pt->add_option("--map", ptc.map, "spectrum map (identity disables preconditioning)");
  pt->add_option("--k", ptc.k, "modified directions");
  pt->add_option("--eps", ptc.eps, "stopping threshold");
  pt->add_option("--max-iter", ptc.max_iter, "iteration cap");
  pt->add_option("--nu", ptc.nu, "last-layer variance scale");
  pt->add_option("--beta", ptc.beta, "bias scale");
  pt->add_option("--eta0", ptc.eta0, "learning-rate scale (0 = 0.9 x stability bound)");
  pt->add_flag("--centered,!--no-centered", ptc.centered, "subtract initial outputs");

  // krr
  auto* kc = app.add_subcommand("krr", "kernel ridge regression fit");
  struct {
    std::string kernel = "laplace";
    double bandwidth = 1.0, gamma = 1e-3;
    int n = 64, dim = 2, freq = 2, test_points = 256;
  } kcc;
  kcc.kernel = file_cfg.get<std::string>("kernel", kcc.kernel);
  kcc.bandwidth = file_cfg.get<double>("bandwidth", kcc.bandwidth);
  kcc.gamma = file_cfg.get<double>("gamma", kcc.gamma);
  kcc.n = file_cfg.get<int>("n", kcc.n);
  kcc.dim = file_cfg.get<int>("dim", kcc.dim);
  kcc.freq = file_cfg.get<int>("freq", kcc.freq);
  kcc.test_points = file_cfg.get<int>("test_points", kcc.test_points);
  kc->add_option("--kernel", kcc.kernel, "laplace | gaussian");
  kc->add_option("--bandwidth", kcc.bandwidth, "kernel bandwidth");
  kc->add_option("--gamma", kcc.gamma, "ridge parameter");
  kc->add_option("--n", kcc.n, "training points");
  kc->add_option("--dim", kcc.dim, "ambient dimension");
  kc->add_option("--freq", kcc.freq, "target frequency (dim = 2 only)");
  kc->add_option("--test-points", kcc.test_points, "held-out points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::filesystem::path out(out_dir);
    ExperimentConfig resolved;
    resolved.set("seed", seed);
    resolved.set("out", out_dir);

    if (fs->parsed()) {
      fscfg.freqs = parse_int_list(fs_freqs);
      fscfg.arms = parse_string_list(fs_arms);
      fscfg.seed = seed;
      resolved.set("experiment", "freq-sweep");
      resolved.set("freqs", join_ints(fscfg.freqs));
      resolved.set("arms", join_strings(fscfg.arms));
      resolved.set("seeds", fscfg.seeds);
      resolved.set("n", fscfg.n);
      resolved.set("width", fscfg.width);
      resolved.set("depth", fscfg.depth);
      resolved.set("eps", fscfg.eps);
      resolved.set("max_iter", fscfg.max_iter);
      resolved.set("flatten_k", fscfg.flatten_k);
      resolved.set("nu", fscfg.nu);
      resolved.set("beta", fscfg.beta);
      resolved.set("centered", fscfg.centered);
      resolved.set("sgd_batch", fscfg.sgd_batch);
      resolved.set("refresh_every", fscfg.refresh_every);
      auto rows = freq_sweep(fscfg);
      std::vector<std::string> lines;
      for (const auto& r : rows) {
        lines.push_back(std::to_string(r.frequency) + "," + r.arm + "," +
                        std::to_string(r.iterations) + "," + format_double(r.final_loss) +
                        "," + std::to_string(r.seed) + "," + r.status);
      }
      write_csv(out / "freq_sweep.csv", "frequency,arm,iterations,final_loss,seed,status",
                lines);
      write_metadata(out, resolved);
    } else if (vs->parsed()) {
      vscfg.sizes = parse_int_list(vs_sizes);
      vscfg.maps = parse_string_list(vs_maps);
      vscfg.seed = seed;
      resolved.set("experiment", "variance-sweep");
      resolved.set("sizes", join_ints(vscfg.sizes));
      resolved.set("maps", join_strings(vscfg.maps));
      resolved.set("trials", vscfg.trials);
      resolved.set("test_points", vscfg.test_points);
      resolved.set("bandwidth", vscfg.bandwidth);
      resolved.set("dim", vscfg.dim);
      auto rows = variance_sweep(vscfg);
      std::vector<std::string> lines;
      for (const auto& r : rows) {
        lines.push_back(std::to_string(r.n) + "," + r.g_name + "," +
                        format_double(r.test_mse) + "," + std::to_string(r.trials));
      }
      write_csv(out / "variance_sweep.csv", "n,g_name,test_mse,trials", lines);
      write_metadata(out, resolved);
    } else if (mv->parsed()) {
      mvcfg.sizes = parse_int_list(mv_sizes);
      mvcfg.seed = seed;
      resolved.set("experiment", "msk-verify");
      resolved.set("sizes", join_ints(mvcfg.sizes));
      resolved.set("seeds", mvcfg.seeds);
      resolved.set("truncation", mvcfg.truncation);
      resolved.set("map", mvcfg.map);
      auto rows = msk_verify(mvcfg);
      std::vector<std::string> lines;
      for (const auto& r : rows) {
        lines.push_back(std::to_string(r.n) + "," + format_double(r.mean_frobenius) + "," +
                        format_double(r.std_frobenius));
      }
      write_csv(out / "msk_verify.csv", "n,mean_frobenius,std", lines);
      write_metadata(out, resolved);
    } else if (nc->parsed()) {
      nccfg.widths = parse_int_list(nc_widths);
      nccfg.seed = seed;
      resolved.set("experiment", "ntk-check");
      resolved.set("widths", join_ints(nccfg.widths));
      resolved.set("seeds", nccfg.seeds);
      resolved.set("n", nccfg.n);
      resolved.set("depth", nccfg.depth);
      resolved.set("beta", nccfg.beta);
      resolved.set("nu", nccfg.nu);
      auto rows = ntk_check(nccfg);
      std::vector<std::string> lines;
      for (const auto& r : rows) {
        lines.push_back(std::to_string(r.width) + "," + format_double(r.mean_rel_gap) + "," +
                        std::to_string(r.seeds));
      }
      write_csv(out / "ntk_check.csv", "width,mean_rel_gap,seeds", lines);
      write_metadata(out, resolved);
    } else if (pt->parsed()) {
      resolved.set("experiment", "pgd-train");
      resolved.set("n", ptc.n);
      resolved.set("freq", ptc.freq);
      resolved.set("width", ptc.width);
      resolved.set("depth", ptc.depth);
      resolved.set("map", ptc.map);
      resolved.set("k", ptc.k);
      resolved.set("eps", ptc.eps);
      resolved.set("max_iter", ptc.max_iter);
      resolved.set("nu", ptc.nu);
      resolved.set("beta", ptc.beta);
      resolved.set("centered", ptc.centered);

      Dataset data = sample_sphere(2, ptc.n, rng::mix(seed, rng::hash_string("data")));
      Vector y = fourier_labels(data, ptc.freq);
      MlpConfig net_cfg;
      net_cfg.input_dim = 2;
      net_cfg.depth = ptc.depth;
      net_cfg.width = ptc.width;
      net_cfg.bias_scale = ptc.beta;
      net_cfg.last_layer_scale = ptc.nu;
      net_cfg.seed = rng::mix(seed, rng::hash_string("net"));
      MlpState net = mlp_init(net_cfg);
      SpectralDecomposition d = clamp_floor(eigh(empirical_ntk(net, data.points)));

      SpectrumMap g = parse_spectrum_map(ptc.map);
      Preconditioner S = (ptc.map == "identity") ? Preconditioner::identity(ptc.n)
                                                 : build_preconditioner(d, g, ptc.k);
      Vector lr_spec = (ptc.map == "identity") ? d.eigenvalues : ks_spectrum(d, g, ptc.k);
      double eta0 = ptc.eta0 > 0.0 ? ptc.eta0 : 0.9 * max_stable_lr(lr_spec);
      resolved.set("eta0", eta0);

      TrainOptions opts;
      opts.eps = ptc.eps;
      opts.max_iter = ptc.max_iter;
      opts.center_at_init = ptc.centered;
      opts.tracked_directions = d.eigenvectors.leftCols(std::min(ptc.n, 8));
      auto [trained, trace] = pgd_train(net, data.points, y, S, eta0, opts);
      (void)trained;
      std::filesystem::create_directories(out);
      export_trace(out / "trace.csv", trace, resolved.dump());
      write_metadata(out, resolved);
    } else if (kc->parsed()) {
      resolved.set("experiment", "krr");
      resolved.set("kernel", kcc.kernel);
      resolved.set("bandwidth", kcc.bandwidth);
      resolved.set("gamma", kcc.gamma);
      resolved.set("n", kcc.n);
      resolved.set("dim", kcc.dim);
      resolved.set("freq", kcc.freq);
      resolved.set("test_points", kcc.test_points);

      KernelSpec kern;
      if (kcc.kernel == "laplace") {
        kern = LaplaceKernel{kcc.bandwidth};
      } else if (kcc.kernel == "gaussian") {
        kern = GaussianKernel{kcc.bandwidth};
      } else {
        throw ConfigError("config field 'kernel' must be laplace or gaussian");
      }
      Dataset train = sample_sphere(kcc.dim, kcc.n, rng::mix(seed, rng::hash_string("train")));
      Dataset test = sample_sphere(kcc.dim, kcc.test_points, rng::mix(seed, rng::hash_string("test")));
      Vector ytr, yte;
      if (kcc.dim == 2) {
        ytr = fourier_labels(train, kcc.freq);
        yte = fourier_labels(test, kcc.freq);
      } else {
        ytr = train.points.col(0);
        yte = test.points.col(0);
      }
      train.labels = ytr;
      KrrModel model = krr_fit(kern, train, kcc.gamma);
      Vector pred_tr = krr_predict(model, train.points);
      Vector pred_te = krr_predict(model, test.points);
      double mse_tr = (pred_tr - ytr).squaredNorm() / kcc.n;
      double mse_te = (pred_te - yte).squaredNorm() / kcc.test_points;
      write_csv(out / "krr.csv", "n,gamma,train_mse,test_mse",
                {std::to_string(kcc.n) + "," + format_double(kcc.gamma) + "," +
                 format_double(mse_tr) + "," + format_double(mse_te)});
      write_metadata(out, resolved);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace msk
