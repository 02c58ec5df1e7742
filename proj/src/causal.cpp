#include "asc/causal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "asc/error.hpp"
#include "asc/parallel.hpp"

namespace asc {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool has_variance(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || x.size() != y.size() || !has_variance(x) || !has_variance(y)) return std::nullopt;
  return pearson(x, y);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw NumericError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw NumericError("pearson: need at least two values");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: correlation undefined for zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> ols(const std::vector<std::span<const double>>& columns, std::span<const double> y,
                        const std::vector<std::string>& names) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(columns.size() + 1);
  if (names.size() != columns.size() + 1) throw NumericError("ols: expected one name per design column");
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  for (Eigen::Index c = 1; c < p; ++c) {
    const auto& col = columns[static_cast<std::size_t>(c - 1)];
    if (static_cast<Eigen::Index>(col.size()) != n) throw NumericError("ols: column '" + names[c] + "' has wrong length");
    x.col(c) = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(perm[k])];
    }
    throw NumericError("singular design: rank " + std::to_string(qr.rank()) + " of " + std::to_string(p) +
                       "; collinear columns: " + cols);
  }
  const Eigen::VectorXd beta = qr.solve(yv);
  return std::vector<double>(beta.data(), beta.data() + p);
}

CausalResult ate(const CausalDataset& d) {
  const std::size_t n = d.rows();
  if (d.t.size() != n || d.z.size() != d.confounder_names.size()) {
    throw NumericError("causal dataset for '" + d.treatment + "' has inconsistent columns");
  }
  const std::size_t need = minimum_rows(d.confounder_names.size());
  if (n < need) {
    throw NumericError("treatment '" + d.treatment + "': " + std::to_string(n) + " rows, need at least " +
                       std::to_string(need));
  }

  std::vector<std::span<const double>> columns{d.t};
  std::vector<std::string> names{"intercept", d.treatment};
  for (std::size_t k = 0; k < d.z.size(); ++k) {
    columns.emplace_back(d.z[k]);
    names.push_back(d.confounder_names[k]);
  }
  const std::vector<double> beta = ols(columns, d.y, names);

  CausalResult r;
  r.treatment = d.treatment;
  r.n = n;
  r.dropped = d.dropped;
  r.confounders = d.confounder_names;
  if (has_variance(d.y)) {
    r.ate = beta[1];
  } else {
    // Constant outcome: the exact least-squares slope is zero.
    r.ate = 0.0;
    r.warnings.push_back("outcome has zero variance; correlation undefined");
  }
  r.pearson_rho = try_pearson(d.t, d.y);
  if (!r.pearson_rho && has_variance(d.y)) r.warnings.push_back("treatment has zero variance; correlation undefined");
  for (std::size_t k = 0; k < d.z.size(); ++k) {
    r.confounder_correlations.emplace_back(d.confounder_names[k], try_pearson(d.t, d.z[k]));
  }
  return r;
}

double feature_value(const CodeFeatures& f, std::string_view name) {
  if (name == "loc") return static_cast<double>(f.loc);
  if (name == "whitespace_count") return static_cast<double>(f.whitespace_count);
  if (name == "token_count") return static_cast<double>(f.token_count);
  if (name == "n_ast_nodes") return static_cast<double>(f.n_ast_nodes);
  if (name == "ast_levels") return static_cast<double>(f.ast_levels);
  if (name == "ast_errors") return static_cast<double>(f.ast_errors);
  if (name == "cyclomatic") return static_cast<double>(f.cyclomatic);
  if (name == "sequence_size") return static_cast<double>(f.sequence_size);
  throw ConfigError("unknown confounder '" + std::string(name) + "'");
}

namespace {

struct SnippetRow {
  bool usable = false;
  std::string problem;
  double loss = 0.0;
  std::vector<double> z;
  std::vector<std::optional<double>> treatment_scores;
};

std::optional<double> treatment_score(const EvalReport& report, const std::string& treatment) {
  const ReportEntry* e = nullptr;
  if (treatment == "global") {
    if (report.global) e = &*report.global;
  } else if (auto cat = category_from_name(treatment)) {
    e = report.category_entry(*cat);
  } else {
    e = report.concept_entry(treatment);
  }
  return e ? std::optional<double>(e->score) : std::nullopt;
}

std::string treatment_category(const Taxonomy& taxonomy, const std::string& treatment) {
  if (treatment == "global") return "global";
  if (category_from_name(treatment)) return treatment;
  return std::string(category_name(taxonomy.categorize(treatment)));
}

}  // namespace

CausalSuite run_causal_suite(const std::vector<SnippetRecord>& corpus, const Taxonomy& taxonomy,
                             const std::vector<std::string>& treatments, const CausalOptions& options) {
  for (const std::string& c : options.confounders) feature_value(CodeFeatures{}, c);

  std::vector<std::string> sorted = treatments;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<SnippetRow> rows(corpus.size());
  parallel_for(corpus.size(), options.workers, [&](std::size_t i) {
    const SnippetRecord& s = corpus[i];
    SnippetRow& row = rows[i];
    LocalEval local = local_eval(s, taxonomy, options.stat, options.align);
    const CodeFeatures features =
        s.features ? *s.features : compute_features(s.source, local.annotated.tree, s.tokens);
    if (s.loss) {
      row.loss = *s.loss;
    } else {
      try {
        row.loss = cross_entropy(s.tokens);
      } catch (const NumericError& e) {
        row.problem = e.what();
        return;
      }
    }
    for (const std::string& c : options.confounders) row.z.push_back(feature_value(features, c));
    for (const std::string& t : sorted) row.treatment_scores.push_back(treatment_score(local.report, t));
    row.usable = true;
  });

  CausalSuite suite;
  suite.snippets = corpus.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].usable) {
      ++suite.usable_snippets;
    } else {
      suite.warnings.push_back({corpus[i].id, "snippet excluded: " + rows[i].problem});
    }
  }

  for (std::size_t ti = 0; ti < sorted.size(); ++ti) {
    CausalDataset d;
    d.treatment = sorted[ti];
    d.confounder_names = options.confounders;
    d.z.resize(options.confounders.size());
    for (const SnippetRow& row : rows) {
      if (!row.usable) continue;
      const auto& score = row.treatment_scores[ti];
      if (!score) {
        ++d.dropped;
        continue;
      }
      d.t.push_back(*score);
      d.y.push_back(row.loss);
      for (std::size_t k = 0; k < row.z.size(); ++k) d.z[k].push_back(row.z[k]);
    }
    try {
      CausalResult r = ate(d);
      r.category = treatment_category(taxonomy, d.treatment);
      for (const std::string& w : r.warnings) suite.warnings.push_back({d.treatment, w});
      suite.results.push_back(std::move(r));
    } catch (const NumericError& e) {
      suite.warnings.push_back({d.treatment, std::string("skipped: ") + e.what()});
    }
  }
  return suite;
}

namespace {

nlohmann::ordered_json opt_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const CausalResult& r) {
  nlohmann::ordered_json j;
  j["treatment"] = r.treatment;
  j["category"] = r.category;
  nlohmann::ordered_json corr = nlohmann::ordered_json::object();
  for (const auto& [name, rho] : r.confounder_correlations) corr[name] = opt_number(rho);
  j["confounder_correlations"] = std::move(corr);
  j["pearson_rho"] = opt_number(r.pearson_rho);
  j["ate"] = r.ate;
  j["n"] = r.n;
  j["dropped"] = r.dropped;
  j["confounders"] = r.confounders;
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::ordered_json to_json(const CausalSuite& suite, const CausalOptions& options, const Taxonomy& taxonomy) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  nlohmann::ordered_json config;
  config["stat"] = stat_name(options.stat.kind);
  config["mode"] = mode_name(options.stat.mode);
  config["confounders"] = options.confounders;
  config["rank_tolerance"] = kRankTolerance;
  config["probability_floor"] = kProbabilityFloor;
  config["grammar_version"] = kGrammarVersion;
  config["taxonomy_version"] = taxonomy.version();
  j["config"] = std::move(config);
  j["snippets"] = suite.snippets;
  j["usable_snippets"] = suite.usable_snippets;
  auto& results = j["results"] = nlohmann::ordered_json::array();
  for (const CausalResult& r : suite.results) results.push_back(to_json(r));
  auto& warnings = j["warnings"] = nlohmann::ordered_json::array();
  for (const CausalWarning& w : suite.warnings) warnings.push_back({{"subject", w.subject}, {"message", w.message}});
  return j;
}

std::string to_csv(const CausalSuite& suite, const std::vector<std::string>& confounders) {
  auto num = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "treatment,category";
  for (const std::string& c : confounders) out += ",rho_" + c;
  out += ",rho_loss,ate,n,dropped\n";
  for (const CausalResult& r : suite.results) {
    out += csv_field(r.treatment) + ',' + csv_field(r.category);
    for (const auto& [name, rho] : r.confounder_correlations) out += ',' + num(rho);
    out += ',' + num(r.pearson_rho) + ',' + format_double(r.ate) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.dropped) + '\n';
  }
  return out;
}

}  // namespace asc
