#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "msk/kernels.hpp"
#include "msk/msk.hpp"
#include "msk/precond.hpp"

namespace msk {

/// Config errors exit the CLI with code 2 and name the offending field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Flat key/value experiment configuration (JSON object, scalar values).
/// Round-trips losslessly and is embedded verbatim in run metadata.
class ExperimentConfig {
 public:
  ExperimentConfig() : data_(nlohmann::json::object()) {}
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool has(const std::string& key) const { return data_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!data_.contains(key)) return fallback;
    try {
      return data_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config field '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  void set(const std::string& key, const T& value) {
    data_[key] = value;
  }

  const nlohmann::json& raw() const { return data_; }
  std::string dump() const { return data_.dump(2); }

 private:
  nlohmann::json data_;
};

/// Rows i.i.d. uniform on S^{d-1} (normalized Gaussian draws); labels zero.
Dataset sample_sphere(int d, int n, std::uint64_t seed);

/// y_i = sin(k * atan2(x_2, x_1)) for points on S^1.
Vector fourier_labels(const Dataset& data, int k);

struct FreqSweepConfig {
  std::vector<int> freqs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<std::string> arms = {"identity", "ntk", "empirical_ntk"};
  int seeds = 3;
  int n = 64;
  int width = 2048;
  int depth = 2;
  double eps = 1e-2;
  int max_iter = 50000;
  int flatten_k = 25;
  double eta0_safety = 0.9;
  double nu = 2.0;     // c_rho so the realized kernel matches the analytic one
  double beta = 0.0;
  bool centered = true;
  int sgd_batch = 0;
  int refresh_every = 100;  // empirical_ntk arm rebuild period
  std::uint64_t seed = 0;
};

struct FreqSweepRow {
  int frequency = 0;
  std::string arm;
  int iterations = 0;
  double final_loss = 0.0;  // mean squared error over train points
  int seed = 0;
  std::string status;  // ok | cap | diverged
};

std::vector<FreqSweepRow> freq_sweep(const FreqSweepConfig& config);

struct VarianceSweepConfig {
  std::vector<int> sizes = {64, 128, 256};
  std::vector<std::string> maps = {"identity", "power_0.5", "shift_0.1"};
  int trials = 25;
  int test_points = 1000;
  double bandwidth = 1.0;
  int dim = 3;  // points on S^2
  std::uint64_t seed = 0;
};

struct VarianceSweepRow {
  int n = 0;
  std::string g_name;
  double test_mse = 0.0;
  int trials = 0;
};

std::vector<VarianceSweepRow> variance_sweep(const VarianceSweepConfig& config);

struct MskVerifyConfig {
  std::vector<int> sizes = {64, 128, 256, 512};
  int seeds = 10;
  int truncation = 8;
  std::string map = "power_0.5";
  std::uint64_t seed = 0;
};

std::vector<ConsistencyRow> msk_verify(const MskVerifyConfig& config);

struct NtkCheckConfig {
  std::vector<int> widths = {256, 1024, 4096};
  int seeds = 5;
  int n = 16;
  int depth = 2;
  double beta = 0.0;
  double nu = 2.0;
  std::uint64_t seed = 0;
};

struct NtkCheckRow {
  int width = 0;
  double mean_rel_gap = 0.0;
  int seeds = 0;
};

std::vector<NtkCheckRow> ntk_check(const NtkCheckConfig& config);

/// Parse a map name: identity | power_<a> | shift_<g> | flatten_<k>.
SpectrumMap parse_spectrum_map(const std::string& name);

std::string format_double(double v);  // %.17g, reproducibility-grade

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::string>& rows);

/// metadata.json next to an output file: resolved config + tool info.
void write_metadata(const std::filesystem::path& dir, const ExperimentConfig& resolved);

/// CLI entry point (subcommands: freq-sweep, variance-sweep, msk-verify,
/// pgd-train, krr, ntk-check). Returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace msk
