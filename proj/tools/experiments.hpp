#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "steinwave/bayes.hpp"
#include "steinwave/gsvgd.hpp"
#include "steinwave/wave.hpp"

namespace steinwave::exp {

/// Config problem with an explicit location, e.g. "$.sampler.omega".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string location, const std::string& message)
      : std::runtime_error(location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::uint64_t hash = 0;

  int schema_version = 1;
  std::string kind;  // "high-contrast" | "low-contrast"
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  int workers = 1;

  // high-contrast geometry
  std::vector<double> layer_lengths;
  std::vector<std::size_t> layer_nodes;
  std::pair<double, double> speed_sq_bounds{0.0, 0.0};

  // low-contrast geometry and generating field
  std::size_t grid_nodes = 0;
  double length = 0.0;
  std::string field_kind;  // "cosine_ramp" | "sine_bump"
  double field_base = 0.0, field_amplitude = 0.0;

  Eigen::VectorXd theta_true;  // layer speeds (high contrast only)

  wave::SourceSignal source;
  wave::SimulationConfig sim;
  std::vector<double> obs_nodes;
  double noise_fraction = 0.01;

  Eigen::VectorXd prior_mean, prior_std;  // sized to the parameter dimension
  int init_count = 0;
  std::vector<std::pair<double, double>> init_range;

  std::string method;  // "gsvgd" | "asvgd" | "rwm"
  vi::LossConfig loss;
  double adam_rate = 0.05;
  int adam_iters = 0;
  int rwm_samples = 0;
  double rwm_scale = 0.0;

  // low-contrast sweep
  int spline_coefficients = 0;
  std::vector<int> sweep_degrees;
  std::vector<double> sweep_omegas;

  // compare inputs
  std::map<std::string, std::filesystem::path> compare_runs;
  std::vector<double> compare_omegas;

  int parameter_dim() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j);

/// Generating smooth c^2 field of a low-contrast experiment.
double true_field_c2(const ExperimentConfig& cfg, double x);

/// Synthetic noisy data plus the model built around it. The data noise is
/// seeded from cfg.seed on a stream separate from sampler randomness. For
/// low-contrast experiments the basis degree is supplied per sweep entry.
struct BuiltModel {
  std::unique_ptr<bayes::BayesModel> model;
  wave::ObservationRecord data;
  double sigma = 0.0;
};
BuiltModel build_model(const ExperimentConfig& cfg, int degree = -1);

void run_forward(const ExperimentConfig& cfg);
void run_inference(const ExperimentConfig& cfg);
void run_baseline(const ExperimentConfig& cfg);
void run_compare(const ExperimentConfig& cfg);

/// Relative L2 disagreement between the recorded pulse-exit trace and the
/// d'Alembert solution for one absorbing-boundary discretization at a given
/// grid density (points per source wavelength).
double boundary_variant_error(wave::AbsorbingVariant variant, int points_per_wavelength);

/// Content with the volatile parts (header timestamps; "generated"/"timing"
/// members of JSON) removed, for byte-determinism comparisons.
std::string deterministic_view(const std::string& content, bool is_json);

int run_cli(int argc, char** argv);

}  // namespace steinwave::exp
