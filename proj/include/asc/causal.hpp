#pragma once

// Correlation and backdoor-adjusted treatment effects of snippet-level
// concept scores on cross-entropy loss.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asc/asceval.hpp"
#include "asc/corpus.hpp"
#include "asc/taxonomy.hpp"

namespace asc {

// Throws NumericError on length mismatch, fewer than two values or a
// zero-variance input.
double pearson(std::span<const double> x, std::span<const double> y);

struct CausalDataset {
  std::string treatment;
  std::vector<std::string> confounder_names;
  std::vector<double> t;
  std::vector<double> y;
  std::vector<std::vector<double>> z;  // one column per confounder
  std::size_t dropped = 0;

  std::size_t rows() const noexcept { return y.size(); }
};

struct CausalResult {
  std::string treatment;
  std::string category;
  std::optional<double> pearson_rho;
  double ate = 0.0;
  std::size_t n = 0;
  std::size_t dropped = 0;
  std::vector<std::string> confounders;
  std::vector<std::pair<std::string, std::optional<double>>> confounder_correlations;
  std::vector<std::string> warnings;
};

// Ordinary least squares of y on [1, columns...] by column-pivoted QR with a
// relative rank tolerance of 1e-10. Returns [intercept, coefficients...].
// Throws NumericError naming the collinear columns when rank deficient.
std::vector<double> ols(const std::vector<std::span<const double>>& columns, std::span<const double> y,
                        const std::vector<std::string>& names);

inline constexpr double kRankTolerance = 1e-10;

// Rows needed for a design with an intercept, the treatment and k
// confounders: (1 + k) + 2.
inline std::size_t minimum_rows(std::size_t confounders) { return confounders + 3; }

// Treatment coefficient of OLS on [1, T, Z...] plus unadjusted correlations.
// Throws NumericError for too few rows, inconsistent
// columns or a singular design.
CausalResult ate(const CausalDataset& dataset);

inline const std::vector<std::string>& default_confounders() {
  static const std::vector<std::string> kNames = {"sequence_size", "n_ast_nodes", "ast_levels", "cyclomatic"};
  return kNames;
}

inline const std::vector<std::string>& default_treatments() {
  static const std::vector<std::string> kNames = {
      "for_statement", "while_statement", "identifier", "string",         "]",       ")",
      "if_statement",  "comparison_operator", "boolean_operator", "for_in_clause", "if_clause", "lambda",
  };
  return kNames;
}

// Value of a CodeFeatures field by name; ConfigError for unknown names.
double feature_value(const CodeFeatures& features, std::string_view name);

struct CausalOptions {
  AggregationStatistic stat;
  std::vector<std::string> confounders = default_confounders();
  std::size_t workers = 1;
  AlignOptions align;
};

struct CausalWarning {
  std::string subject;  // treatment name or snippet id
  std::string message;
};

struct CausalSuite {
  std::vector<CausalResult> results;  // sorted by treatment
  std::vector<CausalWarning> warnings;
  std::size_t snippets = 0;
  std::size_t usable_snippets = 0;
};

// Treatments name node types, category names, or "global". Features and
// loss are computed for snippets that lack them.
CausalSuite run_causal_suite(const std::vector<SnippetRecord>& corpus, const Taxonomy& taxonomy,
                             const std::vector<std::string>& treatments, const CausalOptions& options = {});

nlohmann::ordered_json to_json(const CausalResult& result);
nlohmann::ordered_json to_json(const CausalSuite& suite, const CausalOptions& options, const Taxonomy& taxonomy);
std::string to_csv(const CausalSuite& suite, const std::vector<std::string>& confounders);

}  // namespace asc
