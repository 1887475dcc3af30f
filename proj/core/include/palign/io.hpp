#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "palign/estimation.hpp"
#include "palign/model.hpp"
#include "palign/sampler.hpp"
#include "palign/types.hpp"

namespace palign {

/// A parsed point file: the configuration plus the external point ids, in
/// file order. Internal indices are 0-based and contiguous; all reports use
/// the external ids.
struct PointFile {
  Configuration config;
  std::vector<std::string> ids;
};

/// Point file format: one point per line, whitespace-delimited fields
/// `id  coord...  [colour]`; lines starting with '#' are comments. The
/// dimension (2 or 3) and colour presence are inferred from the first record
/// and enforced; duplicate ids, ragged rows, and non-numeric coordinates are
/// reported with their line numbers.
PointFile parse_points(const std::filesystem::path& path);
void write_points(const std::filesystem::path& path, const Configuration& config,
                  const std::vector<std::string>& ids);

/// Truth sidecar written next to generated instances: true matches by id,
/// plus the generating pose.
struct TruthFile {
  std::vector<std::pair<std::string, std::string>> matches;  // (x id, y id)
  std::optional<Mat> A;
  std::optional<Vec> tau;
  std::optional<double> sigma;
};

TruthFile parse_truth(const std::filesystem::path& path);
void write_truth(const std::filesystem::path& path, const TruthFile& truth);

/// A whitespace-separated list of d*d numbers, row-major; d inferred as the
/// integer square root of the count.
Mat parse_matrix_file(const std::filesystem::path& path);

struct MatchesCsvRow {
  long rank = 0;
  std::string j_id;
  std::string k_id;
  double p = 0.0;
};

/// matches.csv: comment line `# m=<m> n=<n> samples=<count>`, header
/// `rank,j,k,p_jk`, rows ordered by decreasing probability (ties by id
/// pair). Only pairs with positive probability are written.
void write_matches_csv(const std::filesystem::path& path, const MatchProbabilityTable& table,
                       const std::vector<std::string>& x_ids,
                       const std::vector<std::string>& y_ids);
std::vector<MatchesCsvRow> parse_matches_csv(const std::filesystem::path& path);

/// trace.csv: `sweep,log_joint,tau_1..tau_d,sigma[,theta | ,theta12,theta13,theta23]`.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);

void write_summary_json(const std::filesystem::path& path, const Trace& trace,
                        const PosteriorSummary& summary,
                        const std::map<std::string, std::string>& config_echo);

/// Best-effort rendering of the declared matches: x points drawn as '+',
/// transformed y points (A y) as 'o', one segment per declared match. In
/// three dimensions the joint cloud is projected onto its first two
/// principal axes.
void write_matches_svg(const std::filesystem::path& path, const Configuration& x,
                       const Configuration& y, const Mat& transform,
                       const std::vector<std::pair<int, int>>& declared);

/// Flat `key = value` configuration file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

}  // namespace palign
