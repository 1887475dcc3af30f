#include "palign/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "palign/diagnostics.hpp"
#include "palign/em.hpp"
#include "palign/estimation.hpp"
#include "palign/geometry.hpp"
#include "palign/io.hpp"
#include "palign/synthetic.hpp"

namespace palign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string mode_name(TransformMode mode) {
  switch (mode) {
    case TransformMode::kFixedTransform: return "fixed-transform";
    case TransformMode::kRotation2d: return "rotation-2d";
    case TransformMode::kRotation3d: return "rotation-3d";
  }
  throw std::logic_error("unreachable transform mode");
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string join_doubles(const std::vector<double>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i > 0) out += ",";
    out += format_double(vs[i]);
  }
  return out;
}

struct LoadedData {
  PointFile x;
  PointFile y;
  std::optional<Mat> fixed_transform;
  Hyperparams hyper;  // with elicitation applied and mu_tau sized
};

LoadedData load_run_inputs(const RunConfig& config) {
  LoadedData data;
  data.x = parse_points(config.x_path);
  data.y = parse_points(config.y_path);
  const int d = data.x.config.dim() != 0 ? data.x.config.dim() : data.y.config.dim();
  if (data.x.config.dim() != 0 && data.y.config.dim() != 0 &&
      data.x.config.dim() != data.y.config.dim()) {
    throw ValidationError("x and y configurations have different dimensions");
  }
  if (config.mode == TransformMode::kRotation2d && d != 2) {
    throw ValidationError("rotation-2d mode requires 2-d data");
  }
  if (config.mode == TransformMode::kRotation3d && d != 3) {
    throw ValidationError("rotation-3d mode requires 3-d data");
  }
  if (config.mode == TransformMode::kFixedTransform) {
    if (!config.transform_path.has_value()) {
      throw ValidationError("fixed-transform mode requires a transform file");
    }
    data.fixed_transform = parse_matrix_file(*config.transform_path);
    if (data.fixed_transform->rows() != d) {
      throw ValidationError("transform dimension disagrees with the data");
    }
  }

  data.hyper = config.hyper;
  if (config.f0_path.has_value()) {
    const Mat f0 = parse_matrix_file(*config.f0_path);
    if (f0.rows() != 3) throw ValidationError("F0 must be a 3x3 matrix");
    data.hyper.F0 = Eigen::Matrix3d(f0);
  }
  if (config.elicit_l_bar.has_value()) {
    if (!config.volume.has_value()) {
      throw ValidationError("elicitation requires the region volume");
    }
    const double ratio =
        elicit_d_ratio(static_cast<int>(data.x.config.size()),
                       static_cast<int>(data.y.config.size()), *config.elicit_l_bar);
    data.hyper.prior_count_ratio = ratio;
    data.hyper.kappa_match = ratio * *config.volume;
  }
  if (data.hyper.mu_tau.size() == 0) data.hyper.mu_tau = Vec::Zero(d);
  data.hyper.validate();
  return data;
}

// Maps external truth ids onto internal indices; unknown ids are rejected.
std::vector<std::pair<int, int>> truth_index_pairs(const TruthFile& truth,
                                                   const PointFile& x, const PointFile& y) {
  std::map<std::string, int> x_index, y_index;
  for (std::size_t i = 0; i < x.ids.size(); ++i) x_index[x.ids[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < y.ids.size(); ++i) y_index[y.ids[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> out;
  for (const auto& [jid, kid] : truth.matches) {
    const auto jt = x_index.find(jid);
    const auto kt = y_index.find(kid);
    if (jt == x_index.end() || kt == y_index.end()) {
      throw ValidationError("truth file references unknown point id " + jid + "/" + kid);
    }
    out.emplace_back(jt->second, kt->second);
  }
  return out;
}

struct PrecisionRecall {
  int declared = 0;
  int correct = 0;
  int truth_size = 0;
  double precision() const { return declared == 0 ? 1.0 : double(correct) / declared; }
  double recall() const { return truth_size == 0 ? 1.0 : double(correct) / truth_size; }
};

PrecisionRecall against_truth(const std::vector<std::pair<int, int>>& declared,
                              const std::vector<std::pair<int, int>>& truth) {
  const std::set<std::pair<int, int>> truth_set(truth.begin(), truth.end());
  PrecisionRecall pr;
  pr.declared = static_cast<int>(declared.size());
  pr.truth_size = static_cast<int>(truth.size());
  for (const auto& p : declared) pr.correct += truth_set.count(p) ? 1 : 0;
  return pr;
}

void write_common_outputs(const RunConfig& config, const LoadedData& data,
                          const Trace& trace) {
  fs::create_directories(config.out_dir);
  write_trace_csv(config.out_dir / "trace.csv", trace);

  if (trace.samples.empty()) {
    std::cout << "no samples retained; wrote trace.csv only\n";
    return;
  }
  const MatchProbabilityTable table = match_probabilities(trace);
  const PosteriorSummary summary = summarize(trace);
  write_matches_csv(config.out_dir / "matches.csv", table, data.x.ids, data.y.ids);
  write_summary_json(config.out_dir / "summary.json", trace, summary, config_echo(config));

  const LossSpec loss = LossSpec::from_cost_ratio(config.k_values.front());
  const MatchingMatrix declared = optimal_matching(table, loss);
  if (config.emit_plot) {
    const Mat transform = summary.A_hat.has_value()
                              ? *summary.A_hat
                              : (data.fixed_transform.has_value()
                                     ? *data.fixed_transform
                                     : Mat(Mat::Identity(trace.dim, trace.dim)));
    write_matches_svg(config.out_dir / "matches.svg", data.x.config, data.y.config,
                      transform, declared.pairs());
  }

  std::cout << "retained " << trace.samples.size() << " samples; tau_mean = (";
  for (int c = 0; c < summary.tau_mean.size(); ++c) {
    std::cout << (c > 0 ? ", " : "") << summary.tau_mean(c);
  }
  std::cout << "), sigma_mean = " << summary.sigma_mean << "\n";
  std::cout << "optimal matching at K=" << loss.K << ": " << declared.match_count()
            << " matches\n";
  std::cout << "acceptance rates: add " << trace.stats.add.rate() << ", delete "
            << trace.stats.del.rate() << ", switch " << trace.stats.switch_.rate();
  if (trace.mode == TransformMode::kRotation3d) {
    std::cout << ", rotation walk " << trace.stats.rotation_walk.rate();
  }
  std::cout << "\n";

  if (config.truth_path.has_value()) {
    const TruthFile truth = parse_truth(*config.truth_path);
    const auto truth_pairs = truth_index_pairs(truth, data.x, data.y);
    const PrecisionRecall pr = against_truth(declared.pairs(), truth_pairs);
    std::cout << "against truth: declared " << pr.declared << ", correct " << pr.correct
              << ", precision " << pr.precision() << ", recall " << pr.recall() << "\n";
  }
}

}  // namespace

std::map<std::string, std::string> config_echo(const RunConfig& config) {
  std::map<std::string, std::string> echo;
  echo["mode"] = mode_name(config.mode);
  echo["x"] = config.x_path.string();
  echo["y"] = config.y_path.string();
  if (config.transform_path.has_value()) echo["transform"] = config.transform_path->string();
  if (config.f0_path.has_value()) echo["f0"] = config.f0_path->string();
  if (config.truth_path.has_value()) echo["truth"] = config.truth_path->string();
  echo["out"] = config.out_dir.string();
  echo["K"] = join_doubles(config.k_values);
  echo["emit_plot"] = config.emit_plot ? "true" : "false";

  echo["kappa_match"] = format_double(config.hyper.kappa_match);
  echo["prior_count_ratio"] = format_double(config.hyper.prior_count_ratio);
  echo["alpha"] = format_double(config.hyper.alpha);
  echo["beta"] = format_double(config.hyper.beta);
  echo["sigma_tau"] = format_double(config.hyper.sigma_tau);
  if (config.hyper.mu_tau.size() != 0) {
    std::vector<double> mu(config.hyper.mu_tau.data(),
                           config.hyper.mu_tau.data() + config.hyper.mu_tau.size());
    echo["mu_tau"] = join_doubles(mu);
  }
  echo["nu0"] = format_double(config.hyper.nu0);
  echo["kappa0"] = format_double(config.hyper.kappa0);
  echo["gamma"] = format_double(config.hyper.gamma);
  echo["delta"] = format_double(config.hyper.delta);
  echo["p_star"] = format_double(config.hyper.p_star);
  if (config.elicit_l_bar.has_value()) echo["elicit_l_bar"] = format_double(*config.elicit_l_bar);
  if (config.volume.has_value()) echo["volume"] = format_double(*config.volume);

  echo["sweeps"] = std::to_string(config.schedule.sweeps);
  echo["burn_in"] = std::to_string(config.schedule.burn_in);
  echo["thin"] = std::to_string(config.schedule.thin);
  echo["m_updates"] = std::to_string(config.schedule.m_updates_per_sweep);
  echo["seed"] = std::to_string(config.schedule.seed);
  echo["theta13_halfwidth"] = format_double(config.schedule.theta13_halfwidth);
  return echo;
}

void run_align(const RunConfig& config) {
  const LoadedData data = load_run_inputs(config);
  SweepSchedule schedule = config.schedule;
  schedule.sample_rotation = config.mode != TransformMode::kFixedTransform;
  const Trace trace = run_chain(data.x.config, data.y.config, data.hyper, schedule,
                                std::nullopt, data.fixed_transform);
  write_common_outputs(config, data, trace);
}

void run_generate(const GenerateConfig& config) {
  GenerativeSpec spec;
  if (config.box_lo.size() != config.dim || config.box_hi.size() != config.dim) {
    throw ValidationError("generate: box bounds must match the dimension");
  }
  spec.lambda_rate = config.lambda_rate;
  spec.box_lo = config.box_lo;
  spec.box_hi = config.box_hi;
  spec.p_x = config.p_x;
  spec.p_y = config.p_y;
  spec.rho = config.rho;
  spec.labels = config.labels;
  spec.pi_x = config.pi_x;
  spec.pi_y = config.pi_y;
  spec.gamma = config.gamma;
  spec.delta = config.delta;

  Rng rng(config.seed);
  spec.pose.sigma = config.sigma;
  spec.pose.tau = config.tau.has_value() ? *config.tau : Vec(Vec::Zero(config.dim));
  if (config.transform.has_value()) {
    spec.pose.A = parse_matrix_file(*config.transform);
    if (spec.pose.A.rows() != config.dim) {
      throw ValidationError("generate: transform dimension mismatch");
    }
  } else if (config.dim == 2) {
    spec.pose.A = rotation_matrix_2d(sample_uniform_angle(rng));
  } else {
    spec.pose.A = rotation_matrix_3d(sample_uniform_rotation_3d(rng));
  }

  const GeneratedInstance instance = generate(spec, rng);

  fs::create_directories(config.out_dir);
  std::vector<std::string> x_ids, y_ids;
  for (std::size_t i = 0; i < instance.x.size(); ++i) x_ids.push_back(std::to_string(i + 1));
  for (std::size_t i = 0; i < instance.y.size(); ++i) y_ids.push_back(std::to_string(i + 1));
  write_points(config.out_dir / "x.txt", instance.x, x_ids);
  write_points(config.out_dir / "y.txt", instance.y, y_ids);

  TruthFile truth;
  truth.A = spec.pose.A;
  truth.tau = spec.pose.tau;
  truth.sigma = spec.pose.sigma;
  for (const auto& [j, k] : instance.truth.pairs()) {
    truth.matches.emplace_back(x_ids[j], y_ids[k]);
  }
  write_truth(config.out_dir / "truth.txt", truth);

  std::cout << "generated m=" << instance.x.size() << " n=" << instance.y.size()
            << " with " << instance.truth.match_count() << " true matches"
            << " (hidden points: " << instance.hidden.size() << ")\n";
}

void run_em_command(const RunConfig& config) {
  const LoadedData data = load_run_inputs(config);
  const int d = data.x.config.dim() != 0 ? data.x.config.dim() : data.y.config.dim();

  // Deterministic neutral start: identity-or-fixed transform, centroid
  // difference translation, prior-median sigma.
  Rng rng(config.schedule.seed);
  ChainState state = make_initial_state(data.x.config, data.y.config, data.hyper, false,
                                        data.fixed_transform, rng);
  PoseParams init = state.pose;
  if (config.mode != TransformMode::kFixedTransform) {
    init.A = Mat(Mat::Identity(d, d));
  }

  const EmResult result = run_em(data.x.config, data.y.config, data.hyper, init,
                                 config.mode, config.em_max_iters);

  fs::create_directories(config.out_dir);
  json j;
  j["mode"] = mode_name(config.mode);
  j["converged"] = result.converged;
  j["iterations"] = result.objective_trace.size() - 1;
  j["objective_trace"] = result.objective_trace;
  j["sigma"] = result.pose.sigma;
  json tau = json::array();
  for (int c = 0; c < result.pose.tau.size(); ++c) tau.push_back(result.pose.tau(c));
  j["tau"] = tau;
  json a_rows = json::array();
  for (int r = 0; r < result.pose.A.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < result.pose.A.cols(); ++c) row.push_back(result.pose.A(r, c));
    a_rows.push_back(row);
  }
  j["A"] = a_rows;
  j["config"] = config_echo(config);
  std::ofstream out(config.out_dir / "em_summary.json");
  if (!out) throw ValidationError("cannot write em_summary.json");
  out << j.dump(2) << '\n';

  std::ofstream table(config.out_dir / "em_table.csv");
  if (!table) throw ValidationError("cannot write em_table.csv");
  table << std::setprecision(17) << "j,k,p_jk\n";
  for (int jj = 0; jj < result.table.p.rows(); ++jj) {
    for (int kk = 0; kk < result.table.p.cols(); ++kk) {
      table << data.x.ids[jj] << ',' << data.y.ids[kk] << ',' << result.table.p(jj, kk)
            << '\n';
    }
  }

  std::cout << "EM " << (result.converged ? "converged" : "stopped") << " after "
            << result.objective_trace.size() - 1
            << " cycles; objective = " << result.objective_trace.back()
            << ", sigma = " << result.pose.sigma << "\n";
}

void run_multistart(const RunConfig& config) {
  const LoadedData data = load_run_inputs(config);
  if (config.mode == TransformMode::kFixedTransform) {
    throw ValidationError("multistart requires a rotation-sampling mode");
  }
  SweepSchedule short_schedule = config.schedule;
  short_schedule.sample_rotation = true;
  SweepSchedule long_schedule = config.schedule_long;
  long_schedule.sample_rotation = true;

  double threshold = 0.0;
  if (config.threshold.has_value()) {
    threshold = *config.threshold;
  } else {
    // Pilot runs: same kernel, seeds displaced far from the start seeds.
    std::vector<Trace> pilots;
    SweepSchedule pilot_schedule = long_schedule;
    pilot_schedule.burn_in = long_schedule.burn_in;
    for (int i = 0; i < config.pilots; ++i) {
      pilot_schedule.seed = short_schedule.seed + 1000003 + static_cast<std::uint64_t>(i);
      pilots.push_back(run_chain(data.x.config, data.y.config, data.hyper, pilot_schedule));
    }
    threshold = pilot_threshold(pilots);
    std::cout << "pilot threshold: " << threshold << "\n";
  }

  const MultistartReport report = multistart(data.x.config, data.y.config, data.hyper,
                                             short_schedule, long_schedule, config.starts,
                                             threshold);

  fs::create_directories(config.out_dir);
  json j;
  j["n_starts"] = report.n_starts;
  j["passed"] = report.passed;
  j["threshold"] = report.threshold;
  j["seeds"] = report.seeds;
  j["final_log_joint"] = report.final_log_joint;
  json flags = json::array();
  for (char f : report.passed_flags) flags.push_back(f != 0);
  j["passed_flags"] = flags;
  j["consensus"] = report.consensus;
  j["top_L"] = report.top_L;
  json ref = json::array();
  for (const auto& [jj, kk] : report.reference_top_set) {
    ref.push_back(json::array({data.x.ids[jj], data.y.ids[kk]}));
  }
  j["reference_top_set"] = ref;
  j["best_start"] = report.best_start;
  j["config"] = config_echo(config);
  std::ofstream out(config.out_dir / "multistart.json");
  if (!out) throw ValidationError("cannot write multistart.json");
  out << j.dump(2) << '\n';

  std::cout << "multistart: " << report.passed << "/" << report.n_starts
            << " passed threshold " << threshold << "; consensus = "
            << (report.consensus ? "yes" : "no") << " on top " << report.top_L
            << " matches\n";

  if (report.best_trace.has_value() && !report.best_trace->samples.empty()) {
    write_common_outputs(config, data, *report.best_trace);
  }
}

void run_report(const ReportConfig& config) {
  const std::vector<MatchesCsvRow> rows = parse_matches_csv(config.matches_path);

  // Map ids to compact indices so the matching optimiser can be reused.
  std::map<std::string, int> j_index, k_index;
  for (const MatchesCsvRow& r : rows) {
    j_index.emplace(r.j_id, 0);
    k_index.emplace(r.k_id, 0);
  }
  int next = 0;
  for (auto& [id, idx] : j_index) idx = next++;
  next = 0;
  for (auto& [id, idx] : k_index) idx = next++;
  std::vector<std::string> j_ids(j_index.size()), k_ids(k_index.size());
  for (const auto& [id, idx] : j_index) j_ids[idx] = id;
  for (const auto& [id, idx] : k_index) k_ids[idx] = id;

  MatchProbabilityTable table;
  table.p = Eigen::MatrixXd::Zero(static_cast<int>(j_index.size()),
                                  static_cast<int>(k_index.size()));
  table.sample_count = 1;
  for (const MatchesCsvRow& r : rows) {
    table.p(j_index[r.j_id], k_index[r.k_id]) = r.p;
  }

  std::optional<std::set<std::pair<std::string, std::string>>> truth_set;
  if (config.truth_path.has_value()) {
    const TruthFile truth = parse_truth(*config.truth_path);
    truth_set.emplace(truth.matches.begin(), truth.matches.end());
  }

  std::cout << std::setprecision(6);
  for (double k_value : config.k_values) {
    const MatchingMatrix declared = optimal_matching(table, LossSpec::from_cost_ratio(k_value));
    std::cout << "K = " << k_value << ": " << declared.match_count() << " matches\n";
    int rank = 0;
    int correct = 0;
    for (const auto& [j, k] : declared.pairs()) {
      std::cout << "  " << ++rank << ". " << j_ids[j] << " - " << k_ids[k]
                << "  p = " << table.p(j, k) << "\n";
      if (truth_set.has_value() && truth_set->count({j_ids[j], k_ids[k]})) ++correct;
    }
    if (truth_set.has_value()) {
      const int declared_count = declared.match_count();
      std::cout << "  precision " << (declared_count == 0 ? 1.0 : double(correct) / declared_count)
                << ", recall "
                << (truth_set->empty() ? 1.0 : double(correct) / truth_set->size()) << "\n";
    }
  }

  // K-interval structure: the optimal matching changes only at these values.
  std::set<double> breakpoints;
  for (const MatchesCsvRow& r : rows) {
    if (r.p > 0.0 && r.p < 1.0) breakpoints.insert(r.p);
  }
  std::cout << "breakpoints:";
  for (auto it = breakpoints.rbegin(); it != breakpoints.rend(); ++it) {
    std::cout << ' ' << *it;
  }
  std::cout << "\n";
}

}  // namespace palign
