#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "palign/model.hpp"
#include "palign/sampler.hpp"
#include "palign/types.hpp"

namespace palign {

/// Effective settings of an align / em / multistart run. Built by the CLI
/// from a flat key = value config file plus command-line overrides
/// (command line wins); echoed verbatim into summary.json so every run is
/// replayable.
struct RunConfig {
  TransformMode mode = TransformMode::kFixedTransform;
  std::filesystem::path x_path;
  std::filesystem::path y_path;
  std::optional<std::filesystem::path> transform_path;  // required in fixed mode
  std::optional<std::filesystem::path> f0_path;         // 3-d rotation prior
  std::optional<std::filesystem::path> truth_path;
  std::filesystem::path out_dir = ".";

  Hyperparams hyper;
  SweepSchedule schedule;
  std::vector<double> k_values = {0.5};
  bool emit_plot = false;

  // Optional prior elicitation: sets prior_count_ratio from (m, n, L_bar)
  // and kappa_match = prior_count_ratio * volume.
  std::optional<double> elicit_l_bar;
  std::optional<double> volume;

  // Multistart block.
  int starts = 20;
  SweepSchedule schedule_long;
  std::optional<double> threshold;  // absent: derive from pilot runs
  int pilots = 2;

  // EM block.
  int em_max_iters = 200;
};

struct GenerateConfig {
  int dim = 3;
  double lambda_rate = 0.005;
  Vec box_lo;
  Vec box_hi;
  double p_x = 0.3;
  double p_y = 0.3;
  double rho = 1.0;
  double sigma = 1.0;
  std::optional<Vec> tau;                          // default: zero
  std::optional<std::filesystem::path> transform;  // default: random rotation
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";

  std::vector<std::string> labels;
  std::vector<double> pi_x;
  std::vector<double> pi_y;
  double gamma = 0.0;
  double delta = 0.0;
};

struct ReportConfig {
  std::filesystem::path matches_path;
  std::vector<double> k_values = {0.5};
  std::optional<std::filesystem::path> truth_path;
};

/// Runs the chain and writes matches.csv, summary.json, trace.csv and
/// (optionally) matches.svg into out_dir. Throws ValidationError on bad
/// input; other exceptions signal runtime failure.
void run_align(const RunConfig& config);

/// Draws one instance from the generative model and writes x.txt, y.txt and
/// truth.txt into out_dir.
void run_generate(const GenerateConfig& config);

/// Approximate EM baseline; writes em_summary.json and em_table.csv.
void run_em_command(const RunConfig& config);

/// Multistart screening; writes multistart.json plus the best survivor's
/// matches.csv / summary.json / trace.csv.
void run_multistart(const RunConfig& config);

/// Loss-optimal matchings at each K from a matches.csv, with breakpoints and
/// (when truth is given) precision/recall; prints to stdout.
void run_report(const ReportConfig& config);

/// Canonical key = value echo of a run configuration.
std::map<std::string, std::string> config_echo(const RunConfig& config);

}  // namespace palign
