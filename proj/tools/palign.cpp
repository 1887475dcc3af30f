// palign: Bayesian alignment of two unlabelled point configurations.
//
// Subcommands: align, generate, em, multistart, report. Options can come
// from a flat `key = value` config file (--config); command-line flags win.
// Exit status: 0 success, 1 validation error, 2 runtime failure.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "palign/commands.hpp"
#include "palign/io.hpp"
#include "palign/types.hpp"

namespace {

using palign::RunConfig;
using palign::TransformMode;
using palign::ValidationError;

palign::Vec to_vec(const std::vector<double>& values) {
  palign::Vec v(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<int>(i)) = values[i];
  return v;
}

TransformMode parse_mode(const std::string& name) {
  if (name == "fixed-transform") return TransformMode::kFixedTransform;
  if (name == "rotation-2d") return TransformMode::kRotation2d;
  if (name == "rotation-3d") return TransformMode::kRotation3d;
  throw ValidationError("unknown mode: " + name);
}

struct RunFlags {
  std::string config_path;
  std::string mode = "fixed-transform";
  std::string x_path;
  std::string y_path;
  std::string transform_path;
  std::string f0_path;
  std::string truth_path;
  std::string out_dir = ".";
  std::vector<double> k_values = {0.5};
  bool emit_plot = false;

  double kappa_match = 1.0;
  double prior_count_ratio = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double sigma_tau = 1.0;
  std::vector<double> mu_tau;
  double nu0 = 0.0;
  double kappa0 = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double p_star = 0.5;
  double elicit_l_bar = 0.0;
  bool elicit_set = false;
  double volume = 0.0;
  bool volume_set = false;

  long sweeps = 10000;
  long burn_in = 1000;
  long thin = 10;
  int m_updates = 1;
  std::uint64_t seed = 0;
  double theta13_halfwidth = 0.1;

  int starts = 20;
  long long_sweeps = 0;
  long long_burn_in = 0;
  double threshold = 0.0;
  bool threshold_set = false;
  int pilots = 2;

  int em_max_iters = 200;
};

// Seeds the flag defaults from a flat key = value file; the subsequent
// command-line parse overwrites whatever the user gave explicitly, so the
// command line always wins. Hyphens and underscores in keys are equivalent.
void apply_config_file(const std::filesystem::path& path, RunFlags& f) {
  const auto as_double = [&](const std::string& key, const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": non-numeric value for " + key);
    }
  };
  const auto as_list = [&](const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(v);
    while (std::getline(ss, token, ',')) out.push_back(as_double(key, token));
    return out;
  };

  for (const auto& [raw_key, value] : palign::parse_config_file(path)) {
    std::string key = raw_key;
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    if (key == "mode") f.mode = value;
    else if (key == "x") f.x_path = value;
    else if (key == "y") f.y_path = value;
    else if (key == "transform") f.transform_path = value;
    else if (key == "f0") f.f0_path = value;
    else if (key == "truth") f.truth_path = value;
    else if (key == "out") f.out_dir = value;
    else if (key == "K" || key == "k") f.k_values = as_list(key, value);
    else if (key == "emit_plot") f.emit_plot = value == "true" || value == "1";
    else if (key == "kappa_match") f.kappa_match = as_double(key, value);
    else if (key == "prior_count_ratio") f.prior_count_ratio = as_double(key, value);
    else if (key == "alpha") f.alpha = as_double(key, value);
    else if (key == "beta") f.beta = as_double(key, value);
    else if (key == "sigma_tau") f.sigma_tau = as_double(key, value);
    else if (key == "mu_tau") f.mu_tau = as_list(key, value);
    else if (key == "nu0") f.nu0 = as_double(key, value);
    else if (key == "kappa0") f.kappa0 = as_double(key, value);
    else if (key == "gamma") f.gamma = as_double(key, value);
    else if (key == "delta") f.delta = as_double(key, value);
    else if (key == "p_star") f.p_star = as_double(key, value);
    else if (key == "elicit_lbar" || key == "elicit_l_bar") {
      f.elicit_l_bar = as_double(key, value);
      f.elicit_set = true;
    } else if (key == "volume") {
      f.volume = as_double(key, value);
      f.volume_set = true;
    } else if (key == "sweeps") f.sweeps = static_cast<long>(as_double(key, value));
    else if (key == "burn_in") f.burn_in = static_cast<long>(as_double(key, value));
    else if (key == "thin") f.thin = static_cast<long>(as_double(key, value));
    else if (key == "m_updates") f.m_updates = static_cast<int>(as_double(key, value));
    else if (key == "seed") f.seed = static_cast<std::uint64_t>(as_double(key, value));
    else if (key == "theta13_halfwidth") f.theta13_halfwidth = as_double(key, value);
    else if (key == "starts") f.starts = static_cast<int>(as_double(key, value));
    else if (key == "long_sweeps") f.long_sweeps = static_cast<long>(as_double(key, value));
    else if (key == "long_burn_in") f.long_burn_in = static_cast<long>(as_double(key, value));
    else if (key == "threshold") {
      f.threshold = as_double(key, value);
      f.threshold_set = true;
    } else if (key == "pilots") f.pilots = static_cast<int>(as_double(key, value));
    else if (key == "em_max_iters") f.em_max_iters = static_cast<int>(as_double(key, value));
    else throw ValidationError(path.string() + ": unknown configuration key '" + key + "'");
  }
}

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "flat key = value configuration file; explicit flags win");
  cmd->add_option("--mode", f.mode, "fixed-transform | rotation-2d | rotation-3d")
      ->check(CLI::IsMember({"fixed-transform", "rotation-2d", "rotation-3d"}));
  cmd->add_option("--x", f.x_path, "x point file");
  cmd->add_option("--y", f.y_path, "y point file");
  cmd->add_option("--transform", f.transform_path, "fixed transform file (d*d numbers)");
  cmd->add_option("--f0", f.f0_path, "matrix Fisher prior F0 file (3x3)");
  cmd->add_option("--truth", f.truth_path, "truth sidecar for precision/recall");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--K", f.k_values, "cost ratio list for the optimal matching");
  cmd->add_flag("--emit-plot", f.emit_plot, "write matches.svg");

  cmd->add_option("--kappa-match", f.kappa_match, "per-match weight rho/lambda");
  cmd->add_option("--prior-count-ratio", f.prior_count_ratio,
                  "rho/(lambda v) for the match-count prior");
  cmd->add_option("--alpha", f.alpha, "sigma^-2 ~ Gamma(alpha, beta): shape");
  cmd->add_option("--beta", f.beta, "sigma^-2 ~ Gamma(alpha, beta): rate");
  cmd->add_option("--sigma-tau", f.sigma_tau, "translation prior scale");
  cmd->add_option("--mu-tau", f.mu_tau, "translation prior mean (d values)");
  cmd->add_option("--nu0", f.nu0, "2-d rotation prior mean direction");
  cmd->add_option("--kappa0", f.kappa0, "2-d rotation prior concentration");
  cmd->add_option("--gamma", f.gamma, "like-colour match affinity");
  cmd->add_option("--delta", f.delta, "unlike-colour match affinity");
  cmd->add_option("--p-star", f.p_star, "delete-vs-switch proposal probability");
  cmd->add_option("--elicit-lbar", f.elicit_l_bar,
                  "prior guess of the match count (sets the ratios; needs --volume)")
      ->each([&f](const std::string&) { f.elicit_set = true; });
  cmd->add_option("--volume", f.volume, "region volume used by elicitation")
      ->each([&f](const std::string&) { f.volume_set = true; });

  cmd->add_option("--sweeps", f.sweeps, "total sweeps including burn-in");
  cmd->add_option("--burn-in", f.burn_in, "discarded initial sweeps");
  cmd->add_option("--thin", f.thin, "thinning interval");
  cmd->add_option("--m-updates", f.m_updates, "matching moves per sweep");
  cmd->add_option("--seed", f.seed, "master random seed");
  cmd->add_option("--theta13-halfwidth", f.theta13_halfwidth,
                  "random-walk half-width for theta13");
}

RunConfig to_config(const RunFlags& f) {
  RunConfig c;
  c.mode = parse_mode(f.mode);
  if (f.x_path.empty() || f.y_path.empty()) {
    throw ValidationError("both --x and --y point files are required");
  }
  c.x_path = f.x_path;
  c.y_path = f.y_path;
  if (!f.transform_path.empty()) c.transform_path = f.transform_path;
  if (!f.f0_path.empty()) c.f0_path = f.f0_path;
  if (!f.truth_path.empty()) c.truth_path = f.truth_path;
  c.out_dir = f.out_dir;
  c.k_values = f.k_values;
  c.emit_plot = f.emit_plot;

  c.hyper.kappa_match = f.kappa_match;
  c.hyper.prior_count_ratio = f.prior_count_ratio;
  c.hyper.alpha = f.alpha;
  c.hyper.beta = f.beta;
  c.hyper.sigma_tau = f.sigma_tau;
  if (!f.mu_tau.empty()) c.hyper.mu_tau = to_vec(f.mu_tau);
  c.hyper.nu0 = f.nu0;
  c.hyper.kappa0 = f.kappa0;
  c.hyper.gamma = f.gamma;
  c.hyper.delta = f.delta;
  c.hyper.p_star = f.p_star;
  if (f.elicit_set) c.elicit_l_bar = f.elicit_l_bar;
  if (f.volume_set) c.volume = f.volume;

  c.schedule.sweeps = f.sweeps;
  c.schedule.burn_in = f.burn_in;
  c.schedule.thin = f.thin;
  c.schedule.m_updates_per_sweep = f.m_updates;
  c.schedule.seed = f.seed;
  c.schedule.theta13_halfwidth = f.theta13_halfwidth;

  c.starts = f.starts;
  c.schedule_long = c.schedule;
  c.schedule_long.sweeps = f.long_sweeps > 0 ? f.long_sweeps : f.sweeps;
  c.schedule_long.burn_in = f.long_burn_in;
  if (f.threshold_set) c.threshold = f.threshold;
  c.pilots = f.pilots;
  c.em_max_iters = f.em_max_iters;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian alignment of unlabelled point configurations"};
  app.require_subcommand(1);

  RunFlags align_flags, em_flags, multi_flags;

  CLI::App* align = app.add_subcommand("align", "run the MCMC sampler and report matches");
  add_run_options(align, align_flags);

  CLI::App* em = app.add_subcommand("em", "approximate EM baseline");
  add_run_options(em, em_flags);
  em->add_option("--em-max-iters", em_flags.em_max_iters, "maximum EM cycles");

  CLI::App* multi = app.add_subcommand("multistart", "multistart convergence screening");
  add_run_options(multi, multi_flags);
  multi->add_option("--starts", multi_flags.starts, "number of random starts");
  multi->add_option("--long-sweeps", multi_flags.long_sweeps,
                    "continuation sweeps for surviving chains");
  multi->add_option("--long-burn-in", multi_flags.long_burn_in,
                    "burn-in applied at the start of the continuation");
  multi->add_option("--threshold", multi_flags.threshold, "log-posterior pass threshold")
      ->each([&](const std::string&) { multi_flags.threshold_set = true; });
  multi->add_option("--pilots", multi_flags.pilots,
                    "pilot chains used when no threshold is given");

  // A config file seeds the run-style subcommand flags before argv is
  // parsed, so explicit flags override file values.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }

  // generate
  struct {
    int dim = 3;
    double lambda_rate = 0.005;
    std::vector<double> box_lo;
    std::vector<double> box_hi;
    double p_x = 0.3;
    double p_y = 0.3;
    double rho = 1.0;
    double sigma = 1.0;
    std::vector<double> tau;
    std::string transform;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::vector<std::string> labels;
    std::vector<double> pi_x;
    std::vector<double> pi_y;
    double gamma = 0.0;
    double delta = 0.0;
  } gen;
  CLI::App* generate = app.add_subcommand("generate", "simulate from the generative model");
  generate->add_option("--dim", gen.dim)->check(CLI::IsMember({2, 3}));
  generate->add_option("--lambda", gen.lambda_rate, "hidden-point rate per unit volume");
  generate->add_option("--box-lo", gen.box_lo, "box lower corner (d values)");
  generate->add_option("--box-hi", gen.box_hi, "box upper corner (d values)");
  generate->add_option("--p-x", gen.p_x);
  generate->add_option("--p-y", gen.p_y);
  generate->add_option("--rho", gen.rho, "a priori matching tendency");
  generate->add_option("--sigma", gen.sigma, "observation noise scale");
  generate->add_option("--tau", gen.tau, "true translation (d values)");
  generate->add_option("--transform", gen.transform,
                       "true transform file; omitted: random rotation");
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out_dir);
  generate->add_option("--labels", gen.labels, "colour alphabet");
  generate->add_option("--pi-x", gen.pi_x, "x colour marginals");
  generate->add_option("--pi-y", gen.pi_y, "y colour marginals");
  generate->add_option("--gamma", gen.gamma);
  generate->add_option("--delta", gen.delta);

  // report
  struct {
    std::string matches_path;
    std::vector<double> k_values = {0.5};
    std::string truth_path;
  } rep;
  CLI::App* report = app.add_subcommand("report", "loss-optimal matchings from matches.csv");
  report->add_option("--matches", rep.matches_path, "matches.csv path")->required();
  report->add_option("--K", rep.k_values, "cost ratio list");
  report->add_option("--truth", rep.truth_path, "truth sidecar");

  try {
    if (!config_path.empty()) {
      apply_config_file(config_path, align_flags);
      apply_config_file(config_path, em_flags);
      apply_config_file(config_path, multi_flags);
    }
    app.parse(argc, argv);

    if (align->parsed()) {
      palign::run_align(to_config(align_flags));
    } else if (em->parsed()) {
      palign::run_em_command(to_config(em_flags));
    } else if (multi->parsed()) {
      palign::run_multistart(to_config(multi_flags));
    } else if (generate->parsed()) {
      palign::GenerateConfig c;
      c.dim = gen.dim;
      c.lambda_rate = gen.lambda_rate;
      if (gen.box_lo.empty()) gen.box_lo.assign(gen.dim, 0.0);
      if (gen.box_hi.empty()) gen.box_hi.assign(gen.dim, 20.0);
      c.box_lo = to_vec(gen.box_lo);
      c.box_hi = to_vec(gen.box_hi);
      c.p_x = gen.p_x;
      c.p_y = gen.p_y;
      c.rho = gen.rho;
      c.sigma = gen.sigma;
      if (!gen.tau.empty()) c.tau = to_vec(gen.tau);
      if (!gen.transform.empty()) c.transform = gen.transform;
      c.seed = gen.seed;
      c.out_dir = gen.out_dir;
      c.labels = gen.labels;
      c.pi_x = gen.pi_x;
      c.pi_y = gen.pi_y;
      c.gamma = gen.gamma;
      c.delta = gen.delta;
      palign::run_generate(c);
    } else if (report->parsed()) {
      palign::ReportConfig c;
      c.matches_path = rep.matches_path;
      c.k_values = rep.k_values;
      if (!rep.truth_path.empty()) c.truth_path = rep.truth_path;
      palign::run_report(c);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const palign::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
