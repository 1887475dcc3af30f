#include "palign/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace palign {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == token.size() && std::isfinite(out);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << std::setprecision(17);
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + what);
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vec& v) {
  json out = json::array();
  for (int c = 0; c < v.size(); ++c) out.push_back(v(c));
  return out;
}

}  // namespace

PointFile parse_points(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  PointFile out;
  std::set<std::string> seen_ids;
  int dim = 0;
  bool coloured = false;
  bool first = true;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::vector<std::string> tokens = split_ws(body);

    if (first) {
      // Infer d and colour presence: id, then numeric coordinates, then at
      // most one trailing label.
      int numeric = 0;
      double tmp = 0.0;
      while (numeric + 1 < static_cast<int>(tokens.size()) &&
             parse_double(tokens[numeric + 1], tmp)) {
        ++numeric;
      }
      if (numeric + 1 == static_cast<int>(tokens.size())) {
        dim = numeric;
      } else if (numeric + 2 == static_cast<int>(tokens.size())) {
        dim = numeric;
        coloured = true;
      } else {
        parse_fail(path, lineno, "cannot parse record: expected id, coordinates, optional colour");
      }
      if (dim != 2 && dim != 3) {
        parse_fail(path, lineno, "dimension must be 2 or 3, got " + std::to_string(dim));
      }
      first = false;
    }

    const std::size_t expected = 1 + static_cast<std::size_t>(dim) + (coloured ? 1 : 0);
    if (tokens.size() != expected) {
      parse_fail(path, lineno,
                 "expected " + std::to_string(expected) + " fields, got " +
                     std::to_string(tokens.size()));
    }
    if (!seen_ids.insert(tokens[0]).second) {
      parse_fail(path, lineno, "duplicate point id '" + tokens[0] + "'");
    }

    Vec p(dim);
    for (int c = 0; c < dim; ++c) {
      if (!parse_double(tokens[1 + c], p(c))) {
        parse_fail(path, lineno, "non-numeric coordinate '" + tokens[1 + c] + "'");
      }
    }
    out.ids.push_back(tokens[0]);
    out.config.points.push_back(p);
    if (coloured) out.config.colours.push_back(tokens.back());
  }
  out.config.validate();
  return out;
}

void write_points(const std::filesystem::path& path, const Configuration& config,
                  const std::vector<std::string>& ids) {
  if (ids.size() != config.size()) {
    throw std::invalid_argument("write_points: id count differs from point count");
  }
  std::ofstream out = open_output(path);
  for (std::size_t i = 0; i < config.size(); ++i) {
    out << ids[i];
    for (int c = 0; c < config.dim(); ++c) out << ' ' << config.points[i](c);
    if (config.has_colours()) out << ' ' << config.colours[i];
    out << '\n';
  }
}

TruthFile parse_truth(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  TruthFile out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> a_values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::vector<std::string> tokens = split_ws(body);
    const std::string& key = tokens[0];
    if (key == "match") {
      if (tokens.size() != 3) parse_fail(path, lineno, "match lines need two ids");
      out.matches.emplace_back(tokens[1], tokens[2]);
    } else if (key == "sigma") {
      double v = 0.0;
      if (tokens.size() != 2 || !parse_double(tokens[1], v)) {
        parse_fail(path, lineno, "sigma needs one numeric value");
      }
      out.sigma = v;
    } else if (key == "tau") {
      Vec tau(static_cast<int>(tokens.size()) - 1);
      for (std::size_t c = 1; c < tokens.size(); ++c) {
        double v = 0.0;
        if (!parse_double(tokens[c], v)) parse_fail(path, lineno, "non-numeric tau entry");
        tau(static_cast<int>(c) - 1) = v;
      }
      out.tau = tau;
    } else if (key == "A") {
      for (std::size_t c = 1; c < tokens.size(); ++c) {
        double v = 0.0;
        if (!parse_double(tokens[c], v)) parse_fail(path, lineno, "non-numeric A entry");
        a_values.push_back(v);
      }
    } else {
      parse_fail(path, lineno, "unknown truth key '" + key + "'");
    }
  }
  if (!a_values.empty()) {
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a_values.size()))));
    if (d * d != static_cast<int>(a_values.size())) {
      throw ValidationError(path.string() + ": A entry count is not a square");
    }
    Mat A(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) A(r, c) = a_values[static_cast<std::size_t>(r) * d + c];
    }
    out.A = A;
  }
  return out;
}

void write_truth(const std::filesystem::path& path, const TruthFile& truth) {
  std::ofstream out = open_output(path);
  out << "# truth sidecar: generating pose and true matches\n";
  if (truth.sigma.has_value()) out << "sigma " << *truth.sigma << '\n';
  if (truth.tau.has_value()) {
    out << "tau";
    for (int c = 0; c < truth.tau->size(); ++c) out << ' ' << (*truth.tau)(c);
    out << '\n';
  }
  if (truth.A.has_value()) {
    out << "A";
    for (int r = 0; r < truth.A->rows(); ++r) {
      for (int c = 0; c < truth.A->cols(); ++c) out << ' ' << (*truth.A)(r, c);
    }
    out << '\n';
  }
  for (const auto& [jid, kid] : truth.matches) out << "match " << jid << ' ' << kid << '\n';
}

Mat parse_matrix_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    for (const std::string& token : split_ws(body)) {
      double v = 0.0;
      if (!parse_double(token, v)) parse_fail(path, lineno, "non-numeric matrix entry");
      values.push_back(v);
    }
  }
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(values.size()))));
  if (d < 2 || d > 3 || d * d != static_cast<int>(values.size())) {
    throw ValidationError(path.string() + ": expected 4 or 9 matrix entries");
  }
  Mat A(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) A(r, c) = values[static_cast<std::size_t>(r) * d + c];
  }
  return A;
}

void write_matches_csv(const std::filesystem::path& path, const MatchProbabilityTable& table,
                       const std::vector<std::string>& x_ids,
                       const std::vector<std::string>& y_ids) {
  struct Row {
    double p;
    int j;
    int k;
  };
  std::vector<Row> rows;
  for (int j = 0; j < table.p.rows(); ++j) {
    for (int k = 0; k < table.p.cols(); ++k) {
      if (table.p(j, k) > 0.0) rows.push_back({table.p(j, k), j, k});
    }
  }
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.p != b.p) return a.p > b.p;
    return std::pair(x_ids[a.j], y_ids[a.k]) < std::pair(x_ids[b.j], y_ids[b.k]);
  });

  std::ofstream out = open_output(path);
  out << "# m=" << table.p.rows() << " n=" << table.p.cols()
      << " samples=" << table.sample_count << '\n';
  out << "rank,j,k,p_jk\n";
  long rank = 0;
  for (const Row& r : rows) {
    out << ++rank << ',' << x_ids[r.j] << ',' << y_ids[r.k] << ',' << r.p << '\n';
  }
}

std::vector<MatchesCsvRow> parse_matches_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<MatchesCsvRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!header_seen) {
      if (body != "rank,j,k,p_jk") parse_fail(path, lineno, "expected header rank,j,k,p_jk");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(body);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 4) parse_fail(path, lineno, "expected 4 comma-separated fields");
    MatchesCsvRow row;
    double rank = 0.0;
    double p = 0.0;
    if (!parse_double(fields[0], rank) || !parse_double(fields[3], p)) {
      parse_fail(path, lineno, "non-numeric rank or probability");
    }
    row.rank = static_cast<long>(rank);
    row.j_id = fields[1];
    row.k_id = fields[2];
    row.p = p;
    rows.push_back(row);
  }
  if (!header_seen) throw ValidationError(path.string() + ": missing header");
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out = open_output(path);
  out << "sweep,log_joint";
  for (int c = 1; c <= trace.dim; ++c) out << ",tau_" << c;
  out << ",sigma";
  if (trace.mode == TransformMode::kRotation2d) out << ",theta";
  if (trace.mode == TransformMode::kRotation3d) out << ",theta12,theta13,theta23";
  out << '\n';
  for (const ChainSample& s : trace.samples) {
    out << s.sweep << ',' << s.log_joint;
    for (int c = 0; c < trace.dim; ++c) out << ',' << s.tau(c);
    out << ',' << s.sigma;
    if (trace.mode == TransformMode::kRotation2d) out << ',' << s.theta.value();
    if (trace.mode == TransformMode::kRotation3d) {
      out << ',' << s.angles->theta12 << ',' << s.angles->theta13 << ','
          << s.angles->theta23;
    }
    out << '\n';
  }
}

void write_summary_json(const std::filesystem::path& path, const Trace& trace,
                        const PosteriorSummary& summary,
                        const std::map<std::string, std::string>& config_echo) {
  json j;
  j["seed"] = trace.seed;
  j["m"] = trace.m;
  j["n"] = trace.n;
  j["dim"] = trace.dim;
  j["n_retained"] = trace.samples.size();
  switch (trace.mode) {
    case TransformMode::kFixedTransform: j["mode"] = "fixed-transform"; break;
    case TransformMode::kRotation2d: j["mode"] = "rotation-2d"; break;
    case TransformMode::kRotation3d: j["mode"] = "rotation-3d"; break;
  }
  j["tau_mean"] = vector_to_json(summary.tau_mean);
  j["tau_cov"] = matrix_to_json(summary.tau_cov);
  j["sigma_mean"] = summary.sigma_mean;
  j["sigma_var"] = summary.sigma_var;
  if (summary.A_hat.has_value()) j["A_hat"] = matrix_to_json(*summary.A_hat);
  j["L_pmf"] = summary.L_pmf;

  json acc;
  const auto counter_json = [](const AcceptCounter& c) {
    return json{{"proposed", c.proposed}, {"accepted", c.accepted}, {"rate", c.rate()}};
  };
  acc["add"] = counter_json(trace.stats.add);
  acc["delete"] = counter_json(trace.stats.del);
  acc["switch"] = counter_json(trace.stats.switch_);
  acc["rotation_walk"] = counter_json(trace.stats.rotation_walk);
  acc["null_moves"] = trace.stats.null_moves;
  j["acceptance"] = acc;
  j["max_cache_drift"] = trace.max_cache_drift;
  j["config"] = config_echo;

  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

void write_matches_svg(const std::filesystem::path& path, const Configuration& x,
                       const Configuration& y, const Mat& transform,
                       const std::vector<std::pair<int, int>>& declared) {
  const int d = x.dim() != 0 ? x.dim() : y.dim();
  std::vector<Vec> xs = x.points;
  std::vector<Vec> ys;
  ys.reserve(y.points.size());
  for (const Vec& p : y.points) ys.push_back(transform * p);

  // Project 3-d clouds onto the first two principal axes of the joint cloud.
  std::vector<Eigen::Vector2d> px, py;
  if (d == 3) {
    Vec mean = Vec::Zero(3);
    for (const Vec& p : xs) mean += p;
    for (const Vec& p : ys) mean += p;
    const double total = static_cast<double>(xs.size() + ys.size());
    if (total > 0) mean /= total;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec& p : xs) cov += (p - mean) * (p - mean).transpose();
    for (const Vec& p : ys) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Matrix<double, 3, 2> axes;
    axes.col(0) = es.eigenvectors().col(2);  // largest eigenvalues last
    axes.col(1) = es.eigenvectors().col(1);
    for (const Vec& p : xs) px.push_back(axes.transpose() * (p - mean));
    for (const Vec& p : ys) py.push_back(axes.transpose() * (p - mean));
  } else {
    for (const Vec& p : xs) px.push_back(Eigen::Vector2d(p(0), p(1)));
    for (const Vec& p : ys) py.push_back(Eigen::Vector2d(p(0), p(1)));
  }

  double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
  bool first = true;
  for (const auto& list : {px, py}) {
    for (const auto& p : list) {
      if (first) {
        lo_x = hi_x = p(0);
        lo_y = hi_y = p(1);
        first = false;
      } else {
        lo_x = std::min(lo_x, p(0));
        hi_x = std::max(hi_x, p(0));
        lo_y = std::min(lo_y, p(1));
        hi_y = std::max(hi_y, p(1));
      }
    }
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double size = 720.0;
  const double margin = 40.0;
  const auto sx = [&](double v) { return margin + (v - lo_x) / span * size; };
  const auto sy = [&](double v) { return margin + (hi_y - v) / span * size; };

  std::ofstream out = open_output(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin
      << "\" height=\"" << size + 2 * margin << "\">\n";
  for (const auto& [j, k] : declared) {
    out << "  <line x1=\"" << sx(px[j](0)) << "\" y1=\"" << sy(px[j](1)) << "\" x2=\""
        << sx(py[k](0)) << "\" y2=\"" << sy(py[k](1))
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  const double arm = 5.0;
  for (const auto& p : px) {
    const double cx = sx(p(0));
    const double cy = sy(p(1));
    out << "  <line x1=\"" << cx - arm << "\" y1=\"" << cy << "\" x2=\"" << cx + arm
        << "\" y2=\"" << cy << "\" stroke=\"crimson\" stroke-width=\"1.4\"/>\n";
    out << "  <line x1=\"" << cx << "\" y1=\"" << cy - arm << "\" x2=\"" << cx
        << "\" y2=\"" << cy + arm << "\" stroke=\"crimson\" stroke-width=\"1.4\"/>\n";
  }
  for (const auto& p : py) {
    out << "  <circle cx=\"" << sx(p(0)) << "\" cy=\"" << sy(p(1))
        << "\" r=\"4\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.4\"/>\n";
  }
  out << "</svg>\n";
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) parse_fail(path, lineno, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) parse_fail(path, lineno, "empty key");
    out[key] = value;
  }
  return out;
}

}  // namespace palign
