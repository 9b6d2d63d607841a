#include "experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "steinwave/io.hpp"
#include "steinwave/mcmc.hpp"
#include "steinwave/parallel.hpp"
#include "steinwave/signal.hpp"
#include "steinwave/stencil.hpp"

namespace steinwave::exp {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config reading
// ---------------------------------------------------------------------------

struct Reader {
  const json& node;
  std::string path;

  Reader at(const std::string& key) const {
    if (!node.is_object() || !node.contains(key))
      throw ConfigError(path + "." + key, "missing required field");
    return Reader{node.at(key), path + "." + key};
  }
  std::optional<Reader> maybe(const std::string& key) const {
    if (!node.is_object() || !node.contains(key)) return std::nullopt;
    return Reader{node.at(key), path + "." + key};
  }
  template <typename T>
  T as() const {
    try {
      return node.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path, "wrong type");
    }
  }
  Reader item(std::size_t i) const {
    return Reader{node.at(i), path + "[" + std::to_string(i) + "]"};
  }
  std::size_t size() const { return node.size(); }
  bool is_array() const { return node.is_array(); }
  bool is_number() const { return node.is_number(); }
};

void require(bool cond, const std::string& location, const std::string& message) {
  if (!cond) throw ConfigError(location, message);
}

// scalar broadcast or fixed-size array
Eigen::VectorXd vector_field(const Reader& r, int dim) {
  Eigen::VectorXd out(dim);
  if (r.is_number()) {
    out.setConstant(r.as<double>());
    return out;
  }
  require(r.is_array() && static_cast<int>(r.size()) == dim, r.path,
          "expected a number or an array of length " + std::to_string(dim));
  for (int i = 0; i < dim; ++i) out[i] = r.item(static_cast<std::size_t>(i)).as<double>();
  return out;
}

std::vector<std::pair<double, double>> range_field(const Reader& r, int dim) {
  std::vector<std::pair<double, double>> out;
  require(r.is_array() && r.size() >= 1, r.path, "expected [lo, hi] or a list of them");
  const bool single = r.item(0).is_number();
  if (single) {
    require(r.size() == 2, r.path, "expected [lo, hi]");
    const double lo = r.item(0).as<double>(), hi = r.item(1).as<double>();
    require(lo < hi, r.path, "empty interval");
    out.assign(static_cast<std::size_t>(dim), {lo, hi});
    return out;
  }
  require(static_cast<int>(r.size()) == dim, r.path,
          "expected " + std::to_string(dim) + " intervals");
  for (int i = 0; i < dim; ++i) {
    const auto ri = r.item(static_cast<std::size_t>(i));
    require(ri.is_array() && ri.size() == 2, ri.path, "expected [lo, hi]");
    const double lo = ri.item(0).as<double>(), hi = ri.item(1).as<double>();
    require(lo < hi, ri.path, "empty interval");
    out.emplace_back(lo, hi);
  }
  return out;
}

wave::SourceSignal parse_source(const Reader& r) {
  const auto kind = r.at("kind").as<std::string>();
  if (kind == "zero") return wave::SourceSignal::zero();
  if (kind == "gaussian_pulse") {
    const double a = r.at("amplitude").as<double>();
    const double c = r.at("center").as<double>();
    const double w = r.at("width").as<double>();
    require(w > 0.0, r.path + ".width", "must be positive");
    require(c >= 0.0, r.path + ".center", "must be nonnegative");
    return wave::SourceSignal::gaussian_pulse(a, c, w);
  }
  if (kind == "cosine") {
    const double a = r.at("amplitude").as<double>();
    const double f = r.at("frequency").as<double>();
    require(f > 0.0, r.path + ".frequency", "must be positive");
    const auto ph = r.maybe("phase");
    return wave::SourceSignal::cosine(a, f, ph ? ph->as<double>() : 0.0);
  }
  throw ConfigError(r.path + ".kind", "unknown source kind: " + kind);
}

double grid_dx_of(const ExperimentConfig& cfg, std::size_t layer) {
  return cfg.layer_lengths[layer] / static_cast<double>(cfg.layer_nodes[layer] - 1);
}

void validate_obs_nodes(const ExperimentConfig& cfg) {
  const double tol = 1e-9;
  require(!cfg.obs_nodes.empty(), "$.observation.nodes", "need at least one node");
  if (cfg.kind == "high-contrast") {
    double total = 0.0;
    for (double l : cfg.layer_lengths) total += l;
    for (std::size_t k = 0; k < cfg.obs_nodes.size(); ++k) {
      const double x = cfg.obs_nodes[k];
      const std::string loc = "$.observation.nodes[" + std::to_string(k) + "]";
      require(x >= -tol && x <= total + tol, loc, "outside the medium");
      double start = 0.0;
      bool found = false;
      for (std::size_t l = 0; l < cfg.layer_lengths.size() && !found; ++l) {
        const double end = start + cfg.layer_lengths[l];
        if (x <= end + tol) {
          const double dx = grid_dx_of(cfg, l);
          const double local = x - start;
          const double snapped = std::llround(local / dx) * dx;
          require(std::abs(local - snapped) <= tol * std::max(total, 1.0), loc,
                  "not on the grid of layer " + std::to_string(l));
          found = true;
        }
        start = end;
      }
    }
  } else {
    const double dx = cfg.length / static_cast<double>(cfg.grid_nodes - 1);
    for (std::size_t k = 0; k < cfg.obs_nodes.size(); ++k) {
      const double x = cfg.obs_nodes[k];
      const std::string loc = "$.observation.nodes[" + std::to_string(k) + "]";
      require(x >= -tol && x <= cfg.length + tol, loc, "outside the medium");
      const double snapped = std::llround(x / dx) * dx;
      require(std::abs(x - snapped) <= tol * std::max(cfg.length, 1.0), loc, "not on the grid");
    }
  }
}

void validate_cfl(const ExperimentConfig& cfg) {
  const double c_max = std::sqrt(cfg.speed_sq_bounds.second);
  if (cfg.kind == "high-contrast") {
    for (std::size_t l = 0; l < cfg.layer_lengths.size(); ++l) {
      const double courant = c_max * cfg.sim.dt / grid_dx_of(cfg, l);
      require(courant <= cfg.sim.courant_limit, "$.grid.dt",
              "CFL violated in layer " + std::to_string(l) +
                  " at the upper speed bound (courant " + std::to_string(courant) + ")");
    }
  } else {
    const double dx = cfg.length / static_cast<double>(cfg.grid_nodes - 1);
    const double courant = c_max * cfg.sim.dt / dx;
    require(courant <= cfg.sim.courant_limit, "$.grid.dt",
            "CFL violated at the upper speed bound (courant " + std::to_string(courant) + ")");
  }
}

// ---------------------------------------------------------------------------
// output helpers
// ---------------------------------------------------------------------------

io::FileHeader header_of(const ExperimentConfig& cfg, const std::string& schema) {
  io::FileHeader h;
  h.config_hash = cfg.hash;
  h.seed = cfg.seed;
  h.schema = schema;
  return h;
}

json meta_of(const ExperimentConfig& cfg, const std::string& schema) {
  std::array<char, 24> hash{};
  std::snprintf(hash.data(), hash.size(), "%016llx",
                static_cast<unsigned long long>(cfg.hash));
  return json{{"schema", schema},
              {"version", io::kVersion},
              {"config_hash", hash.data()},
              {"seed", cfg.seed}};
}

std::string particles_csv(const ExperimentConfig& cfg, const Eigen::MatrixXd& particles,
                          const Eigen::VectorXd& log_post) {
  std::ostringstream os;
  os << header_of(cfg, "particles/1").render();
  os << "particle";
  for (Eigen::Index k = 0; k < particles.cols(); ++k) os << ",theta" << k;
  os << ",log_posterior\n";
  for (Eigen::Index i = 0; i < particles.rows(); ++i) {
    os << i;
    for (Eigen::Index k = 0; k < particles.cols(); ++k)
      os << "," << io::format_double(particles(i, k));
    os << "," << io::format_double(log_post[i]) << "\n";
  }
  return os.str();
}

std::string histogram_csv(const ExperimentConfig& cfg, const Eigen::MatrixXd& particles) {
  constexpr int kBins = 24;
  std::ostringstream os;
  os << header_of(cfg, "histogram/1").render();
  os << "dim,bin_lo,bin_hi,count\n";
  for (Eigen::Index k = 0; k < particles.cols(); ++k) {
    const auto [lo, hi] = cfg.init_range[static_cast<std::size_t>(k)];
    const double w = (hi - lo) / kBins;
    std::array<int, kBins> hist{};
    for (Eigen::Index i = 0; i < particles.rows(); ++i) {
      int b = static_cast<int>((particles(i, k) - lo) / w);
      b = std::clamp(b, 0, kBins - 1);
      ++hist[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < kBins; ++b)
      os << k << "," << io::format_double(lo + b * w) << "," << io::format_double(lo + (b + 1) * w)
         << "," << hist[static_cast<std::size_t>(b)] << "\n";
  }
  return os.str();
}

Eigen::VectorXd batch_log_posterior(const vi::Target& model, const Eigen::MatrixXd& particles,
                                    int workers) {
  Eigen::VectorXd lp(particles.rows());
  parallel_for(static_cast<std::size_t>(particles.rows()), workers, [&](std::size_t i) {
    lp[static_cast<Eigen::Index>(i)] =
        model.log_posterior(particles.row(static_cast<Eigen::Index>(i)).transpose());
  });
  return lp;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path) {
  CsvTable t;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    if (t.columns.empty()) {
      while (std::getline(ls, tok, ',')) t.columns.push_back(tok);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw std::runtime_error("empty csv: " + path.string());
  return t;
}

int column_index(const CsvTable& t, const std::string& name, const std::filesystem::path& path) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end())
    throw std::runtime_error("column '" + name + "' missing in " + path.string());
  return static_cast<int>(it - t.columns.begin());
}

}  // namespace

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

int ExperimentConfig::parameter_dim() const {
  return kind == "high-contrast" ? static_cast<int>(layer_lengths.size()) : spline_coefficients;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.hash = io::fnv1a(j.dump());
  Reader root{j, "$"};

  cfg.schema_version = root.at("schema_version").as<int>();
  require(cfg.schema_version == 1, "$.schema_version", "unsupported schema version");
  cfg.kind = root.at("kind").as<std::string>();
  require(cfg.kind == "high-contrast" || cfg.kind == "low-contrast", "$.kind",
          "must be 'high-contrast' or 'low-contrast'");
  cfg.seed = root.at("seed").as<std::uint64_t>();
  cfg.output_dir = root.at("output_dir").as<std::string>();
  require(!cfg.output_dir.empty(), "$.output_dir", "must not be empty");
  if (const auto w = root.maybe("workers")) {
    cfg.workers = w->as<int>();
    require(cfg.workers >= 1, "$.workers", "must be >= 1");
  }

  if (cfg.kind == "high-contrast") {
    const auto medium = root.at("medium");
    const auto layers = medium.at("layers");
    require(layers.is_array() && layers.size() >= 1, layers.path, "need at least one layer");
    cfg.theta_true.resize(static_cast<Eigen::Index>(layers.size()));
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto li = layers.item(i);
      const double len = li.at("length").as<double>();
      const auto nodes = li.at("nodes").as<std::size_t>();
      const double c2 = li.at("speed_sq_true").as<double>();
      require(len > 0.0, li.path + ".length", "must be positive");
      require(nodes >= 5, li.path + ".nodes", "need at least 5 nodes");
      require(c2 > 0.0, li.path + ".speed_sq_true", "must be positive");
      cfg.layer_lengths.push_back(len);
      cfg.layer_nodes.push_back(nodes);
      cfg.theta_true[static_cast<Eigen::Index>(i)] = c2;
    }
    const auto bounds = medium.at("speed_sq_bounds");
    require(bounds.is_array() && bounds.size() == 2, bounds.path, "expected [lo, hi]");
    cfg.speed_sq_bounds = {bounds.item(0).as<double>(), bounds.item(1).as<double>()};
    require(cfg.speed_sq_bounds.first > 0.0 &&
                cfg.speed_sq_bounds.first < cfg.speed_sq_bounds.second,
            bounds.path, "need 0 < lo < hi");
    for (Eigen::Index i = 0; i < cfg.theta_true.size(); ++i)
      require(cfg.theta_true[i] >= cfg.speed_sq_bounds.first &&
                  cfg.theta_true[i] <= cfg.speed_sq_bounds.second,
              "$.medium.layers[" + std::to_string(i) + "].speed_sq_true",
              "outside speed_sq_bounds");
  } else {
    const auto field = root.at("field");
    cfg.grid_nodes = field.at("grid_nodes").as<std::size_t>();
    require(cfg.grid_nodes >= 5, field.path + ".grid_nodes", "need at least 5 nodes");
    cfg.length = field.at("length").as<double>();
    require(cfg.length > 0.0, field.path + ".length", "must be positive");
    cfg.field_kind = field.at("true_kind").as<std::string>();
    require(cfg.field_kind == "cosine_ramp" || cfg.field_kind == "sine_bump",
            field.path + ".true_kind", "must be 'cosine_ramp' or 'sine_bump'");
    cfg.field_base = field.at("base").as<double>();
    cfg.field_amplitude = field.at("amplitude").as<double>();
    require(cfg.field_base > 0.0 && cfg.field_base + cfg.field_amplitude > 0.0,
            field.path, "generating field must stay positive");
    const auto bounds = field.at("speed_sq_bounds");
    require(bounds.is_array() && bounds.size() == 2, bounds.path, "expected [lo, hi]");
    cfg.speed_sq_bounds = {bounds.item(0).as<double>(), bounds.item(1).as<double>()};
    require(cfg.speed_sq_bounds.first > 0.0 &&
                cfg.speed_sq_bounds.first < cfg.speed_sq_bounds.second,
            bounds.path, "need 0 < lo < hi");

    const auto spline = root.at("spline");
    cfg.spline_coefficients = spline.at("coefficients").as<int>();
    require(cfg.spline_coefficients >= 1, spline.path + ".coefficients", "must be >= 1");
    const auto degrees = spline.at("degrees");
    require(degrees.is_array() && degrees.size() >= 1, degrees.path, "need at least one degree");
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      const int k = degrees.item(i).as<int>();
      require(k >= 0, degrees.path, "degrees must be nonnegative");
      require(cfg.spline_coefficients >= k + 1, degrees.path,
              "need coefficients >= degree+1 for degree " + std::to_string(k));
      cfg.sweep_degrees.push_back(k);
    }
    const auto omegas = root.at("sampler").at("omegas");
    require(omegas.is_array() && omegas.size() >= 1, omegas.path, "need at least one omega");
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      const double w = omegas.item(i).as<double>();
      require(w >= 0.0 && w <= 1.0, omegas.path, "omega must lie in [0,1]");
      cfg.sweep_omegas.push_back(w);
    }
  }

  cfg.source = parse_source(root.at("source"));

  const auto grid = root.at("grid");
  cfg.sim.dt = grid.at("dt").as<double>();
  cfg.sim.t_end = grid.at("t_end").as<double>();
  require(cfg.sim.dt > 0.0, "$.grid.dt", "must be positive");
  require(cfg.sim.t_end > cfg.sim.dt, "$.grid.t_end", "must exceed dt");
  if (const auto cl = grid.maybe("courant_limit")) {
    cfg.sim.courant_limit = cl->as<double>();
    require(cfg.sim.courant_limit > 0.0, "$.grid.courant_limit", "must be positive");
  }

  const auto obs = root.at("observation");
  const auto nodes = obs.at("nodes");
  require(nodes.is_array() && nodes.size() >= 1, nodes.path, "need at least one node");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    cfg.obs_nodes.push_back(nodes.item(i).as<double>());
  cfg.noise_fraction = obs.at("noise_fraction").as<double>();
  require(cfg.noise_fraction > 0.0 && cfg.noise_fraction < 1.0, obs.path + ".noise_fraction",
          "must lie in (0,1)");

  const int dim = cfg.parameter_dim();
  const auto prior = root.at("prior");
  cfg.prior_mean = vector_field(prior.at("mean"), dim);
  cfg.prior_std = vector_field(prior.at("std"), dim);
  for (int i = 0; i < dim; ++i)
    require(cfg.prior_std[i] > 0.0, "$.prior.std", "must be positive");

  const auto init = root.at("init");
  cfg.init_count = init.at("count").as<int>();
  require(cfg.init_count >= 1, "$.init.count", "must be >= 1");
  cfg.init_range = range_field(init.at("range"), dim);
  for (int i = 0; i < dim; ++i)
    require(cfg.init_range[static_cast<std::size_t>(i)].first >= cfg.speed_sq_bounds.first &&
                cfg.init_range[static_cast<std::size_t>(i)].second <= cfg.speed_sq_bounds.second,
            "$.init.range", "init range must lie inside speed_sq_bounds");

  const auto sampler = root.at("sampler");
  cfg.method = sampler.at("method").as<std::string>();
  require(cfg.method == "gsvgd" || cfg.method == "asvgd" || cfg.method == "rwm",
          "$.sampler.method", "must be gsvgd, asvgd or rwm");
  if (const auto v = sampler.maybe("omega")) cfg.loss.omega = v->as<double>();
  require(cfg.loss.omega >= 0.0 && cfg.loss.omega <= 1.0, "$.sampler.omega",
          "must lie in [0,1]");
  if (const auto v = sampler.maybe("xi")) cfg.loss.xi = v->as<double>();
  require(cfg.loss.xi > 0.0, "$.sampler.xi", "must be positive");
  if (const auto v = sampler.maybe("epsilon")) cfg.loss.epsilon = v->as<double>();
  if (const auto v = sampler.maybe("elbo_samples")) cfg.loss.elbo_samples = v->as<int>();
  require(cfg.loss.elbo_samples >= 1, "$.sampler.elbo_samples", "must be >= 1");
  if (const auto v = sampler.maybe("max_iters")) cfg.loss.max_iters = v->as<int>();
  require(cfg.loss.max_iters >= 1, "$.sampler.max_iters", "must be >= 1");
  if (const auto v = sampler.maybe("line_search_probes"))
    cfg.loss.line_search_probes = v->as<int>();
  require(cfg.loss.line_search_probes >= 3, "$.sampler.line_search_probes", "must be >= 3");
  if (const auto v = sampler.maybe("adam_rate")) cfg.adam_rate = v->as<double>();
  if (const auto v = sampler.maybe("adam_iters")) cfg.adam_iters = v->as<int>();
  if (const auto v = sampler.maybe("rwm_samples")) cfg.rwm_samples = v->as<int>();
  if (const auto v = sampler.maybe("rwm_scale")) cfg.rwm_scale = v->as<double>();
  if (cfg.method == "asvgd")
    require(cfg.adam_iters >= 1 && cfg.adam_rate > 0.0, "$.sampler",
            "asvgd needs adam_iters >= 1 and adam_rate > 0");
  if (cfg.method == "rwm")
    require(cfg.rwm_samples >= 10 && cfg.rwm_scale > 0.0, "$.sampler",
            "rwm needs rwm_samples >= 10 and rwm_scale > 0");
  cfg.loss.workers = cfg.workers;

  if (const auto cmp = root.maybe("compare")) {
    const auto runs = cmp->at("runs");
    for (const auto& key : {"gsvgd", "asvgd", "rwm"})
      cfg.compare_runs[key] = runs.at(key).as<std::string>();
    if (const auto om = cmp->maybe("omegas")) {
      for (std::size_t i = 0; i < om->size(); ++i)
        cfg.compare_omegas.push_back(om->item(i).as<double>());
    } else {
      cfg.compare_omegas = {0.0, 0.5, 1.0};
    }
  }

  validate_obs_nodes(cfg);
  validate_cfl(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

double true_field_c2(const ExperimentConfig& cfg, double x) {
  const double s = x / cfg.length;
  if (cfg.field_kind == "cosine_ramp")
    return cfg.field_base + cfg.field_amplitude * 0.5 * (1.0 - std::cos(M_PI * s));
  return cfg.field_base + cfg.field_amplitude * std::sin(M_PI * s);  // sine_bump
}

// ---------------------------------------------------------------------------
// model construction
// ---------------------------------------------------------------------------

BuiltModel build_model(const ExperimentConfig& cfg, int degree) {
  BuiltModel out;
  wave::ObservationRecord clean;

  bayes::GaussianPrior prior{cfg.prior_mean,
                             cfg.prior_std.cwiseProduct(cfg.prior_std).asDiagonal()};
  std::vector<std::pair<double, double>> bounds(
      static_cast<std::size_t>(cfg.parameter_dim()), cfg.speed_sq_bounds);

  if (cfg.kind == "high-contrast") {
    bayes::HighContrastProblem problem;
    problem.lengths = cfg.layer_lengths;
    problem.nodes = cfg.layer_nodes;
    problem.source = cfg.source;
    problem.config = cfg.sim;
    problem.obs_nodes = cfg.obs_nodes;
    clean = wave::solve_high_contrast(problem.medium_for(cfg.theta_true), cfg.source, cfg.sim,
                                      cfg.obs_nodes);
    const double peak = clean.values.cwiseAbs().maxCoeff();
    out.sigma = cfg.noise_fraction * peak;
    out.data = clean;
    std::mt19937_64 noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> noise(0.0, out.sigma);
    for (Eigen::Index i = 0; i < out.data.values.rows(); ++i)
      for (Eigen::Index j = 0; j < out.data.values.cols(); ++j)
        out.data.values(i, j) += noise(noise_rng);
    out.model = std::make_unique<bayes::BayesModel>(
        problem, out.data,
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.obs_nodes.size()), out.sigma),
        prior, bounds);
    return out;
  }

  if (degree < 0) degree = cfg.sweep_degrees.front();
  bayes::LowContrastProblem problem;
  problem.grid_nodes = cfg.grid_nodes;
  problem.length = cfg.length;
  problem.basis = bspline::BSplineBasis::clamped_uniform(cfg.spline_coefficients, degree,
                                                         cfg.length);
  problem.source = cfg.source;
  problem.config = cfg.sim;
  problem.obs_nodes = cfg.obs_nodes;

  clean = wave::solve_low_contrast([&](double x) { return true_field_c2(cfg, x); },
                                   cfg.grid_nodes, cfg.length, cfg.source, cfg.sim,
                                   cfg.obs_nodes);
  const double peak = clean.values.cwiseAbs().maxCoeff();
  out.sigma = cfg.noise_fraction * peak;
  out.data = clean;
  std::mt19937_64 noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> noise(0.0, out.sigma);
  for (Eigen::Index i = 0; i < out.data.values.rows(); ++i)
    for (Eigen::Index j = 0; j < out.data.values.cols(); ++j)
      out.data.values(i, j) += noise(noise_rng);
  out.model = std::make_unique<bayes::BayesModel>(
      problem, out.data,
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.obs_nodes.size()), out.sigma),
      prior, bounds);
  return out;
}

// ---------------------------------------------------------------------------
// run-forward: observations + derivative and boundary reports
// ---------------------------------------------------------------------------

namespace {

std::string derivative_report_csv(const ExperimentConfig& cfg) {
  wave::CosineWave cosine{1.0, 2.0 * M_PI, 0.0, -1.0};
  wave::GaussianWave gauss{1.0 / (2.0 * M_PI), 1.0, -1.0, 1.5};  // wavelength-1 equivalent
  const double span = 3.0;                                       // three wavelengths

  std::ostringstream os;
  os << header_of(cfg, "derivative-report/1").render();
  os << "wave,order,points_per_wavelength,rel_error,rel_error_interior\n";
  for (int ppw : {8, 12, 16, 24, 32, 48, 64, 96, 128}) {
    const std::size_t n = static_cast<std::size_t>(3 * ppw) + 1;
    const double dx = span / static_cast<double>(n - 1);
    Eigen::VectorXd fc(n), fg(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) * dx;
      fc[static_cast<Eigen::Index>(i)] = cosine.value(x, 0.0);
      fg[static_cast<Eigen::Index>(i)] = gauss.value(x, 0.0);
    }
    const Eigen::VectorXd fs = fc + fg;
    struct Wave {
      const char* name;
      const Eigen::VectorXd& f;
      std::function<double(double)> d1, d2;
    };
    const Wave waves[3] = {
        {"cosine", fc, [&](double x) { return cosine.dx(x, 0.0); },
         [&](double x) { return cosine.dxx(x, 0.0); }},
        {"gaussian", fg, [&](double x) { return gauss.dx(x, 0.0); },
         [&](double x) { return gauss.dxx(x, 0.0); }},
        {"sum", fs, [&](double x) { return cosine.dx(x, 0.0) + gauss.dx(x, 0.0); },
         [&](double x) { return cosine.dxx(x, 0.0) + gauss.dxx(x, 0.0); }},
    };
    for (const auto& w : waves) {
      for (int order = 1; order <= 2; ++order) {
        const fd::DerivativeMatrix op(n, dx, order);
        const Eigen::VectorXd num = op.apply(w.f);
        double err = 0.0, err_int = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = static_cast<double>(i) * dx;
          const double exact = order == 1 ? w.d1(x) : w.d2(x);
          const double e = std::abs(num[static_cast<Eigen::Index>(i)] - exact);
          scale = std::max(scale, std::abs(exact));
          err = std::max(err, e);
          if (i >= 2 && i + 2 < n) err_int = std::max(err_int, e);
        }
        os << w.name << "," << order << "," << ppw << "," << io::format_double(err / scale)
           << "," << io::format_double(err_int / scale) << "\n";
      }
    }
  }
  return os.str();
}

}  // namespace

/// Pulse-exit study: the recorded trace at an interior node is compared
/// against the d'Alembert solution S(t - x/c); the absorbing-boundary error
/// reflects back through the node, so the disagreement measures the boundary
/// treatment once the grid resolves the pulse.
double boundary_variant_error(wave::AbsorbingVariant variant, int ppw) {
  const double c = 1.0, span = 3.0, sigma_x = 1.0 / (2.0 * M_PI);
  const double tau = sigma_x / c;
  const auto src = wave::SourceSignal::gaussian_pulse(1.0, 6.0 * tau, tau);
  const std::size_t n = static_cast<std::size_t>(3 * ppw) + 1;
  const double dx = span / static_cast<double>(n - 1);
  wave::SimulationConfig sim;
  sim.dt = 0.4 * dx / c;
  sim.t_end = 6.0 * tau + span / c + 8.0 * tau + 2.0;  // pulse exit plus echo window
  sim.courant_limit = 0.5;
  const double x_obs = 1.5;
  const auto rec = wave::solve_low_contrast(Eigen::VectorXd::Constant(
                                                static_cast<Eigen::Index>(n), c * c),
                                            span, src, sim, {x_obs}, variant);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < rec.times.size(); ++t) {
    const double exact = src.value(rec.times[t] - x_obs / c);
    const double got = rec.values(0, static_cast<Eigen::Index>(t));
    num += (got - exact) * (got - exact);
    den += exact * exact;
  }
  return std::sqrt(num / den);
}


void run_forward(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);

  wave::ObservationRecord rec;
  if (cfg.kind == "high-contrast") {
    bayes::HighContrastProblem problem;
    problem.lengths = cfg.layer_lengths;
    problem.nodes = cfg.layer_nodes;
    rec = wave::solve_high_contrast(problem.medium_for(cfg.theta_true), cfg.source, cfg.sim,
                                    cfg.obs_nodes);
  } else {
    rec = wave::solve_low_contrast([&](double x) { return true_field_c2(cfg, x); },
                                   cfg.grid_nodes, cfg.length, cfg.source, cfg.sim,
                                   cfg.obs_nodes);
  }
  io::atomic_write(cfg.output_dir / "observations.csv",
                   io::to_csv(rec, header_of(cfg, "observation-record/1")));

  io::atomic_write(cfg.output_dir / "derivative_report.csv", derivative_report_csv(cfg));

  std::ostringstream bc;
  bc << header_of(cfg, "boundary-comparison/1").render();
  bc << "variant,points_per_wavelength,rel_error\n";
  json first_ok = json::object();
  const std::pair<const char*, wave::AbsorbingVariant> variants[] = {
      {"five_point", wave::AbsorbingVariant::FivePoint},
      {"backward3", wave::AbsorbingVariant::Backward3},
      {"centered3", wave::AbsorbingVariant::Centered3}};
  const double tol = 1e-3;
  for (const auto& [name, variant] : variants) {
    int reached = -1;
    for (int ppw : {6, 8, 10, 12, 16, 20, 24, 32, 40, 48, 64}) {
      const double err = boundary_variant_error(variant, ppw);
      bc << name << "," << ppw << "," << io::format_double(err) << "\n";
      if (reached < 0 && err <= tol) reached = ppw;
    }
    first_ok[name] = reached;
  }
  io::atomic_write(cfg.output_dir / "boundary_comparison.csv", bc.str());

  json summary;
  summary["meta"] = meta_of(cfg, "forward-summary/1");
  summary["boundary_tolerance"] = tol;
  summary["boundary_first_ppw_within_tolerance"] = first_ok;
  io::atomic_write(cfg.output_dir / "forward_summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// run-inference
// ---------------------------------------------------------------------------

namespace {

struct SamplerOutput {
  Eigen::MatrixXd particles;
  vi::Trace trace;
  Eigen::VectorXd log_post;
  long forward_solves = 0;
};

SamplerOutput run_particle_sampler(const ExperimentConfig& cfg, const vi::Target& model,
                                   const vi::LossConfig& loss_cfg, std::uint64_t sampler_seed) {
  model.reset_forward_solve_count();
  vi::ParticleSet init;
  init.particles = vi::halton_init(cfg.init_count, cfg.parameter_dim(), cfg.init_range);
  std::mt19937_64 rng(sampler_seed);

  SamplerOutput out;
  if (cfg.method == "asvgd") {
    auto [set, trace] = vi::asvgd_run(
        model, init, vi::AdamState::init(cfg.init_count, cfg.parameter_dim(), cfg.adam_rate),
        cfg.adam_iters, loss_cfg, rng);
    out.particles = std::move(set.particles);
    out.trace = std::move(trace);
  } else {
    auto [set, trace] = vi::gsvgd_run(model, init, loss_cfg, rng);
    out.particles = std::move(set.particles);
    out.trace = std::move(trace);
  }
  out.forward_solves = model.forward_solve_count();
  out.log_post = batch_log_posterior(model, out.particles, loss_cfg.workers);
  return out;
}

json sampler_summary(const ExperimentConfig& cfg, const SamplerOutput& out,
                     const std::string& schema) {
  json j;
  j["meta"] = meta_of(cfg, schema);
  j["method"] = cfg.method;
  j["converged"] = out.trace.converged;
  j["stop_reason"] = out.trace.stop_reason;
  j["iterations"] = out.trace.rows.empty() ? 0 : out.trace.rows.back().iteration;
  j["forward_solves"] = out.forward_solves;
  if (!out.trace.rows.empty()) {
    const auto& last = out.trace.rows.back();
    j["final"] = {{"loss", last.loss}, {"elbo", last.elbo}, {"sup_norm", last.sup_norm}};
  }
  Eigen::Index best = 0;
  out.log_post.maxCoeff(&best);
  j["mode"] = std::vector<double>(out.particles.row(best).begin(),
                                  out.particles.row(best).end());
  j["mode_log_posterior"] = out.log_post[best];
  if (cfg.kind == "high-contrast")
    j["theta_true"] = std::vector<double>(cfg.theta_true.begin(), cfg.theta_true.end());
  j["timing"] = {{"wall_seconds", out.trace.wall_seconds}};
  return j;
}

void write_sampler_outputs(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                           const vi::Target& model, const SamplerOutput& out,
                           const Eigen::MatrixXd& init_particles) {
  const Eigen::VectorXd init_lp = batch_log_posterior(model, init_particles, cfg.workers);
  io::atomic_write(dir / "particles_init.csv", particles_csv(cfg, init_particles, init_lp));
  io::atomic_write(dir / "particles_final.csv", particles_csv(cfg, out.particles, out.log_post));
  io::atomic_write(dir / "trace.csv", io::to_csv(out.trace, header_of(cfg, "trace/1")));
  io::atomic_write(dir / "histogram.csv", histogram_csv(cfg, out.particles));
  io::atomic_write(dir / "run_summary.json",
                   sampler_summary(cfg, out, "inference-summary/1").dump(2) + "\n");
}

std::string predictive_band_csv(const ExperimentConfig& cfg, int degree,
                                const Eigen::MatrixXd& particles) {
  const auto basis =
      bspline::BSplineBasis::clamped_uniform(cfg.spline_coefficients, degree, cfg.length);
  std::ostringstream os;
  os << header_of(cfg, "predictive-band/1").render();
  os << "x,c2_true,q05,q25,q50,q75,q95\n";
  const int n_check = 33;
  std::vector<double> vals(static_cast<std::size_t>(particles.rows()));
  for (int g = 0; g < n_check; ++g) {
    const double x = cfg.length * static_cast<double>(g) / (n_check - 1);
    const Eigen::VectorXd row = basis.row(x);
    for (Eigen::Index i = 0; i < particles.rows(); ++i)
      vals[static_cast<std::size_t>(i)] = row.dot(particles.row(i).transpose());
    std::sort(vals.begin(), vals.end());
    auto quantile = [&](double q) {
      const double pos = q * (static_cast<double>(vals.size()) - 1.0);
      const auto lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, vals.size() - 1);
      const double f = pos - static_cast<double>(lo);
      return (1.0 - f) * vals[lo] + f * vals[hi];
    };
    os << io::format_double(x) << "," << io::format_double(true_field_c2(cfg, x));
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) os << "," << io::format_double(quantile(q));
    os << "\n";
  }
  return os.str();
}

}  // namespace

void run_inference(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  if (cfg.method == "rwm") {
    run_baseline(cfg);
    return;
  }

  if (cfg.kind == "high-contrast") {
    auto built = build_model(cfg);
    io::atomic_write(cfg.output_dir / "observations.csv",
                     io::to_csv(built.data, header_of(cfg, "observation-record/1")));
    vi::LossConfig loss_cfg = cfg.loss;
    const auto out = run_particle_sampler(cfg, *built.model, loss_cfg, cfg.seed);
    const Eigen::MatrixXd init =
        vi::halton_init(cfg.init_count, cfg.parameter_dim(), cfg.init_range);
    write_sampler_outputs(cfg, cfg.output_dir, *built.model, out, init);
    return;
  }

  // low contrast: sweep over (degree, omega) as independent jobs
  struct Combo {
    int degree;
    double omega;
    std::filesystem::path dir;
    json summary;
    double neg_lp_best = 0.0, neg_lp_mean = 0.0, log_neg_elbo = 0.0;
    bool converged = false;
    long solves = 0;
    int iterations = 0;
  };
  std::vector<Combo> combos;
  for (int k : cfg.sweep_degrees)
    for (double w : cfg.sweep_omegas) {
      Combo c;
      c.degree = k;
      c.omega = w;
      c.dir = cfg.output_dir /
              ("k" + std::to_string(k) + "_w" + io::format_double(w));
      combos.push_back(std::move(c));
    }

  {
    // the shared synthetic data file (degree only affects the basis)
    auto built = build_model(cfg, cfg.sweep_degrees.front());
    io::atomic_write(cfg.output_dir / "observations.csv",
                     io::to_csv(built.data, header_of(cfg, "observation-record/1")));
  }

  const int job_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(combos.size())));
  parallel_for(combos.size(), job_workers, [&](std::size_t idx) {
    auto& combo = combos[idx];
    ExperimentConfig local = cfg;
    local.loss.omega = combo.omega;
    local.loss.workers = std::max(1, cfg.workers / job_workers);
    auto built = build_model(local, combo.degree);
    const std::uint64_t combo_seed =
        cfg.seed ^ io::fnv1a("k=" + std::to_string(combo.degree) +
                             ",w=" + io::format_double(combo.omega));
    const auto out = run_particle_sampler(local, *built.model, local.loss, combo_seed);
    const Eigen::MatrixXd init =
        vi::halton_init(cfg.init_count, cfg.parameter_dim(), cfg.init_range);
    std::filesystem::create_directories(combo.dir);
    write_sampler_outputs(local, combo.dir, *built.model, out, init);
    io::atomic_write(combo.dir / "predictive_band.csv",
                     predictive_band_csv(cfg, combo.degree, out.particles));

    combo.neg_lp_best = -out.log_post.maxCoeff();
    combo.neg_lp_mean = -out.log_post.mean();
    const double elbo = out.trace.rows.empty() ? 0.0 : out.trace.rows.back().elbo;
    combo.log_neg_elbo = elbo < 0.0 ? std::log(-elbo) : std::numeric_limits<double>::quiet_NaN();
    combo.converged = out.trace.converged;
    combo.solves = out.forward_solves;
    combo.iterations = out.trace.rows.empty() ? 0 : out.trace.rows.back().iteration;
  });

  std::ostringstream sweep;
  sweep << header_of(cfg, "sweep-summary/1").render();
  sweep << "degree,omega,neg_log_posterior_best,neg_log_posterior_mean,log_neg_elbo,"
           "converged,iterations,forward_solves\n";
  for (const auto& c : combos) {
    sweep << c.degree << "," << io::format_double(c.omega) << ","
          << io::format_double(c.neg_lp_best) << "," << io::format_double(c.neg_lp_mean) << ","
          << io::format_double(c.log_neg_elbo) << "," << (c.converged ? 1 : 0) << ","
          << c.iterations << "," << c.solves << "\n";
  }
  io::atomic_write(cfg.output_dir / "sweep_summary.csv", sweep.str());
}

// ---------------------------------------------------------------------------
// run-baseline
// ---------------------------------------------------------------------------

void run_baseline(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  auto built = build_model(cfg);
  io::atomic_write(cfg.output_dir / "observations.csv",
                   io::to_csv(built.data, header_of(cfg, "observation-record/1")));

  built.model->reset_forward_solve_count();
  std::mt19937_64 rng(cfg.seed);
  const auto chain =
      mcmc::rwm_sample(*built.model, cfg.rwm_samples, cfg.prior_mean, cfg.rwm_scale, rng);
  io::atomic_write(cfg.output_dir / "chain.csv", io::to_csv(chain, header_of(cfg, "chain/1")));

  json j;
  j["meta"] = meta_of(cfg, "baseline-summary/1");
  j["method"] = "rwm";
  j["samples"] = cfg.rwm_samples;
  j["acceptance_rate"] = chain.acceptance_rate();
  j["proposal_scale_final"] = chain.proposal_scale;
  j["forward_solves"] = built.model->forward_solve_count();
  Eigen::Index best = 0;
  chain.log_posterior.maxCoeff(&best);
  j["mode"] = std::vector<double>(chain.samples.row(best).begin(), chain.samples.row(best).end());
  j["mode_log_posterior"] = chain.log_posterior[best];
  if (cfg.kind == "high-contrast")
    j["theta_true"] = std::vector<double>(cfg.theta_true.begin(), cfg.theta_true.end());
  io::atomic_write(cfg.output_dir / "run_summary.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// run-compare
// ---------------------------------------------------------------------------

void run_compare(const ExperimentConfig& cfg) {
  require(!cfg.compare_runs.empty(), "$.compare", "missing compare section");
  for (const auto& [name, dir] : cfg.compare_runs)
    if (!std::filesystem::exists(dir))
      throw ConfigError("$.compare.runs." + name, "run directory not found: " + dir.string());

  // seeds must match across the referenced runs (paired-seed design)
  for (const auto& [name, dir] : cfg.compare_runs) {
    const json j = json::parse(io::read_file(dir / "run_summary.json"));
    const auto run_seed = j.at("meta").at("seed").get<std::uint64_t>();
    if (run_seed != cfg.seed)
      throw ConfigError("$.compare.runs." + name,
                        "run seed " + std::to_string(run_seed) +
                            " does not match compare seed " + std::to_string(cfg.seed));
  }

  std::filesystem::create_directories(cfg.output_dir);
  auto built = build_model(cfg);
  const auto& model = *built.model;

  // traces of the two particle methods
  const auto gsvgd_trace = read_csv_table(cfg.compare_runs.at("gsvgd") / "trace.csv");
  const auto asvgd_trace = read_csv_table(cfg.compare_runs.at("asvgd") / "trace.csv");
  const auto g_loss = column_index(gsvgd_trace, "loss", "gsvgd trace");
  const auto g_fs = column_index(gsvgd_trace, "forward_solves", "gsvgd trace");
  const auto a_loss = column_index(asvgd_trace, "loss", "asvgd trace");
  const auto a_fs = column_index(asvgd_trace, "forward_solves", "asvgd trace");

  // final particle sets
  auto read_particles = [&](const std::filesystem::path& p) {
    const auto t = read_csv_table(p);
    const int d = cfg.parameter_dim();
    Eigen::MatrixXd out(t.rows.size(), d);
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      for (int k = 0; k < d; ++k) out(static_cast<Eigen::Index>(i), k) = t.rows[i][1 + k];
    return out;
  };
  const Eigen::MatrixXd g_final =
      read_particles(cfg.compare_runs.at("gsvgd") / "particles_final.csv");
  const Eigen::MatrixXd a_final =
      read_particles(cfg.compare_runs.at("asvgd") / "particles_final.csv");

  const auto chain_table = read_csv_table(cfg.compare_runs.at("rwm") / "chain.csv");
  const int d = cfg.parameter_dim();
  const auto m = static_cast<std::size_t>(g_final.rows());
  auto rwm_window = [&](std::size_t upto) {
    const std::size_t take = std::min(m, upto);
    Eigen::MatrixXd out(take, d);
    for (std::size_t i = 0; i < take; ++i)
      for (int k = 0; k < d; ++k)
        out(static_cast<Eigen::Index>(i), k) = chain_table.rows[upto - take + i][1 + k];
    return out;
  };

  // shared-loss evaluation with common frozen variates per omega
  auto shared_loss = [&](const Eigen::MatrixXd& particles, double omega,
                         const vi::ElboVariates& v) {
    vi::LossConfig lc = cfg.loss;
    lc.omega = omega;
    vi::GaussianKDE kde(particles);
    return vi::loss(particles, kde, model, lc, v).loss;
  };

  json final_losses = json::object();
  std::map<double, vi::ElboVariates> variates;
  for (double w : cfg.compare_omegas) {
    std::mt19937_64 vr(cfg.seed ^ io::fnv1a("compare-elbo-" + io::format_double(w)));
    variates.emplace(w, vi::ElboVariates::draw(cfg.loss.elbo_samples, d, static_cast<int>(m), vr));
    json per = json::object();
    per["gsvgd"] = shared_loss(g_final, w, variates.at(w));
    per["asvgd"] = shared_loss(a_final, w, variates.at(w));
    per["rwm"] = shared_loss(rwm_window(chain_table.rows.size()), w, variates.at(w));
    final_losses[io::format_double(w)] = per;
  }

  // budget table at the runs' own omega
  std::set<long> budget_set;
  for (const auto& r : gsvgd_trace.rows) budget_set.insert(static_cast<long>(r[g_fs]));
  for (const auto& r : asvgd_trace.rows) budget_set.insert(static_cast<long>(r[a_fs]));
  std::vector<long> budgets(budget_set.begin(), budget_set.end());

  auto loss_at_budget = [](const CsvTable& t, int loss_col, int fs_col, long budget) {
    double out = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : t.rows) {
      if (static_cast<long>(r[fs_col]) <= budget) out = r[loss_col];
      else break;
    }
    return out;
  };

  // RWM loss re-evaluated at a thinned set of budget checkpoints
  const std::size_t rwm_checkpoints = 8;
  std::map<long, double> rwm_at;
  if (!budgets.empty()) {
    std::mt19937_64 vr(cfg.seed ^ io::fnv1a("compare-rwm"));
    const auto vv = vi::ElboVariates::draw(cfg.loss.elbo_samples, d, static_cast<int>(m), vr);
    for (std::size_t c = 0; c < rwm_checkpoints; ++c) {
      const auto bi = (budgets.size() - 1) * (c + 1) / rwm_checkpoints;
      const long budget = budgets[bi];
      const auto upto = std::min<std::size_t>(chain_table.rows.size(),
                                              static_cast<std::size_t>(std::max<long>(budget, 1)));
      if (upto < m) continue;
      rwm_at[budget] = shared_loss(rwm_window(upto), cfg.loss.omega, vv);
    }
  }

  std::ostringstream table;
  table << header_of(cfg, "compare/1").render();
  table << "forward_solves,gsvgd_loss,asvgd_loss,rwm_loss\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : io::format_double(v); };
  for (long b : budgets) {
    table << b << "," << cell(loss_at_budget(gsvgd_trace, g_loss, g_fs, b)) << ","
          << cell(loss_at_budget(asvgd_trace, a_loss, a_fs, b)) << ",";
    if (const auto it = rwm_at.find(b); it != rwm_at.end()) table << io::format_double(it->second);
    table << "\n";
  }
  io::atomic_write(cfg.output_dir / "compare.csv", table.str());

  json j;
  j["meta"] = meta_of(cfg, "compare-summary/1");
  j["omega_of_traces"] = cfg.loss.omega;
  j["final_losses_by_omega"] = final_losses;
  j["budgets"] = budgets;
  io::atomic_write(cfg.output_dir / "compare_summary.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

std::string deterministic_view(const std::string& content, bool is_json) {
  if (!is_json) return io::without_timestamps(content);
  json j = json::parse(content);
  if (j.contains("meta") && j["meta"].contains("generated")) j["meta"].erase("generated");
  j.erase("timing");
  return j.dump(2) + "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"wave prospection experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  std::optional<int> workers_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--out", out_override, "override the output directory");
    cmd->add_option("--workers", workers_override, "override the worker count");
  };

  auto* forward_cmd = app.add_subcommand("run-forward", "forward solve and operator reports");
  auto* inference_cmd = app.add_subcommand("run-inference", "synthetic-data inversion");
  auto* baseline_cmd = app.add_subcommand("run-baseline", "random-walk Metropolis reference");
  auto* compare_cmd = app.add_subcommand("run-compare", "budget-aligned method comparison");
  auto* validate_cmd = app.add_subcommand("validate-config", "check a config and exit");
  for (auto* cmd : {forward_cmd, inference_cmd, baseline_cmd, compare_cmd, validate_cmd})
    add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    json j;
    {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("$", "cannot open config file: " + config_path);
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
      }
    }
    if (seed_override) j["seed"] = *seed_override;
    if (out_override) j["output_dir"] = *out_override;
    if (workers_override) j["workers"] = *workers_override;
    const auto cfg = parse_config(j);

    if (validate_cmd->parsed()) {
      std::array<char, 24> hash{};
      std::snprintf(hash.data(), hash.size(), "%016llx",
                    static_cast<unsigned long long>(cfg.hash));
      std::cout << json{{"ok", true}, {"config_hash", hash.data()}}.dump() << "\n";
      return 0;
    }
    if (forward_cmd->parsed()) run_forward(cfg);
    if (inference_cmd->parsed()) run_inference(cfg);
    if (baseline_cmd->parsed()) run_baseline(cfg);
    if (compare_cmd->parsed()) run_compare(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cout << json{{"error",
                       {{"type", "config"}, {"location", e.location()}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cout << json{{"error", {{"type", "runtime"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  }
}

}  // namespace steinwave::exp
