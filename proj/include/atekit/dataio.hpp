#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atekit/core.hpp"

namespace atekit::dataio {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated text with a header row. Surrounding double quotes are
/// stripped from each cell. Throws FileNotFound, or ParseError (with row and
/// column) on ragged rows.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// A column is numeric when every non-empty cell other than "NA" parses as a
/// number; empty or "NA" cells in a numeric column throw MissingValue. Other
/// columns are categorical: levels are sorted, the first is dropped, and the
/// indicator for level v of column c is named "c=v".
Dataset load_csv(const std::string& path, const std::string& outcome_col, const std::string& treatment_col,
                 const std::vector<std::string>& drop_cols = {});
Dataset table_to_dataset(const CsvTable& table, const std::string& outcome_col,
                         const std::string& treatment_col, const std::vector<std::string>& drop_cols = {});

struct ManifestEntry {
  enum class Kind { numeric, categorical };
  enum class Role { covariate, outcome, treatment };

  std::string source_column;
  Kind kind = Kind::numeric;
  std::vector<std::string> levels;  // categorical: all levels, first is the reference
  Role role = Role::covariate;
  std::string positive;  // outcome/treatment given as text: the value coded 1
};

/// JSON list of {source_column, kind, levels, role?, positive?}, or an object
/// holding that list under "columns".
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Count of covariate columns the manifest produces after encoding.
std::size_t encoded_width(const std::vector<ManifestEntry>& manifest);

/// Applies the manifest to a raw study file. Throws SchemaMismatch when a
/// manifest column is absent or a categorical cell holds an unlisted level.
Dataset rhc_prepare(const std::string& csv_path, const std::string& manifest_path);
Dataset apply_manifest(const CsvTable& table, const std::vector<ManifestEntry>& manifest);

struct SynthSpec {
  enum class Link { logistic, clipped_linear };

  std::size_t n = 1000;
  std::size_t d = 10;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  double tau = 1.0;
  Link link = Link::logistic;
  double noise_sd = 1.0;
  std::optional<Eigen::VectorXd> hetero;
  /// e(0): logistic uses intercept logit(e_center), clipped_linear adds it.
  double e_center = 0.5;
  /// Multiplies x'gamma inside the link.
  double link_scale = 1.0;

  /// Throws InvalidArgument on inconsistent dimensions or values.
  void validate() const;
  /// True propensity for a linear index x'gamma.
  double propensity(double index) const;
};

struct OracleSample {
  Dataset dataset;
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;
  Eigen::VectorXd e_true;
  Eigen::VectorXd mu0_true;
  Eigen::VectorXd mu1_true;
  double tau_true = 0.0;    // population effect
  double tau_t_true = 0.0;  // mean effect over the sample's treated units
};

/// X ~ iid N(0, 1); W ~ Bernoulli(e(X)); y_w = tau w + X'beta + w X'hetero +
/// noise_sd * N(0, 1). Deterministic given seed.
OracleSample generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

/// Named designs: randomized, confounded_linear, poor_overlap, well_overlap,
/// product_sparse. Throws UnknownDgp.
SynthSpec named_dgp(const std::string& name, std::size_t n);
const std::vector<std::string>& dgp_names();

}  // namespace atekit::dataio
