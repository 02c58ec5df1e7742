#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "asc/cli.hpp"
#include "asc/error.hpp"
#include "testkit.hpp"

using namespace asc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "asc_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::vector<SnippetRecord> random_corpus(std::uint64_t seed, int n, bool errors = false) {
  std::mt19937_64 rng(seed);
  std::vector<SnippetRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(testkit::random_snippet(rng, "s" + std::to_string(i), 10, 150, errors));
  return out;
}

RunConfig config_for(const fs::path& input, const fs::path& output) {
  RunConfig c;
  c.input = input;
  c.output = output;
  c.seed = 7;
  c.resamples = 100;
  c.workers = 2;
  return c;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(ASC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("features enriches every snippet and is idempotent") {
  const fs::path dir = fresh_dir("features");
  save_corpus(random_corpus(1, 3), dir / "in.jsonl");
  std::ostringstream log;
  REQUIRE(cmd_features(config_for(dir / "in.jsonl", dir / "a"), log) == 0);
  const auto enriched = load_corpus(dir / "a" / "corpus.jsonl");
  REQUIRE(enriched.size() == 3);
  for (const auto& s : enriched) {
    REQUIRE(s.features.has_value());
    CHECK(s.loss.has_value());
    CHECK(s.features->n_ast_nodes == count_nodes(parse(s.source)));
    CHECK(*s.loss == doctest::Approx(cross_entropy(s.tokens)));
  }
  REQUIRE(cmd_features(config_for(dir / "a" / "corpus.jsonl", dir / "b"), log) == 0);
  CHECK(slurp(dir / "a" / "corpus.jsonl") == slurp(dir / "b" / "corpus.jsonl"));
  const auto header = read_json(dir / "a" / "features.json");
  CHECK(header["schema_version"] == kSchemaVersion);
  CHECK(header["config"]["grammar_version"] == std::string(kGrammarVersion));
  CHECK(header["config"]["taxonomy_version"] == Taxonomy::builtin().version());
}

TEST_CASE("an invalid record fails the run and names the snippet") {
  const fs::path dir = fresh_dir("invalid");
  auto corpus = random_corpus(2, 3);
  corpus[1].id = "broken-one";
  corpus[1].tokens[1].text += "!";
  {
    std::ofstream out(dir / "in.jsonl");
    for (const auto& s : corpus) out << to_json(s).dump() << "\n";
  }
  std::ostringstream log;
  CHECK(cmd_features(config_for(dir / "in.jsonl", dir / "out"), log) != 0);
  CHECK(log.str().find("broken-one") != std::string::npos);

  std::ostringstream out, vlog;
  CHECK(cmd_validate(config_for(dir / "in.jsonl", dir / "v"), out, vlog) == 1);
  CHECK(out.str().find("(broken-one): text mismatch") != std::string::npos);
  CHECK(out.str().find("3 records, 1 invalid") != std::string::npos);
  const auto validation = read_json(dir / "v" / "validation.json");
  CHECK(validation["invalid"] == 1);
  CHECK(validation["schema_version"] == kSchemaVersion);
  CHECK(validation["config"]["taxonomy_version"] == Taxonomy::builtin().version());
}

TEST_CASE("eval on an all-ones corpus flags everything confident, and is reproducible") {
  const fs::path dir = fresh_dir("eval_ones");
  auto corpus = random_corpus(3, 8);
  for (auto& s : corpus) {
    for (std::size_t i = 1; i < s.tokens.size(); ++i) s.tokens[i].ntp = 1.0;
  }
  save_corpus(corpus, dir / "in.jsonl");
  std::ostringstream log;
  RunConfig cfg = config_for(dir / "in.jsonl", dir / "a");
  cfg.per_snippet = true;
  cfg.dump_alignment = true;
  REQUIRE(cmd_eval(cfg, log) == 0);
  const auto report = read_json(dir / "a" / "eval.json");
  REQUIRE(!report["categories"].empty());
  for (const auto& c : report["categories"]) {
    CHECK(c["score"] == 1.0);
    CHECK(c["flag"] == "confident");
  }
  CHECK(report["config"]["seed"] == 7);
  CHECK(report["config"]["stat"] == "median");
  CHECK(report["config"]["pool"] == "node");
  CHECK(fs::exists(dir / "a" / "eval.csv"));
  CHECK(fs::exists(dir / "a" / "snippets" / "s0.eval.json"));
  CHECK(fs::exists(dir / "a" / "alignment.jsonl"));

  cfg.output = dir / "b";
  REQUIRE(cmd_eval(cfg, log) == 0);
  cfg.output = dir / "c";
  cfg.workers = 1;
  REQUIRE(cmd_eval(cfg, log) == 0);
  CHECK(slurp(dir / "a" / "eval.csv") == slurp(dir / "b" / "eval.csv"));
  CHECK(slurp(dir / "a" / "eval.csv") == slurp(dir / "c" / "eval.csv"));
  auto first = read_json(dir / "a" / "eval.json");
  auto second = read_json(dir / "b" / "eval.json");
  first["config"].erase("output");
  second["config"].erase("output");
  CHECK(first == second);
}

TEST_CASE("eval recovers planted per-concept medians") {
  // identifier-only snippets carry draws around 0.3; "x = y" snippets add
  // "=" tokens drawn around 0.8.
  const fs::path dir = fresh_dir("eval_planted");
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> low(0.2, 0.4), high(0.7, 0.9);
  std::vector<SnippetRecord> corpus;
  std::vector<double> planted_eq;
  for (int i = 0; i < 201; ++i) {
    const double eq = high(rng);
    planted_eq.push_back(eq);
    SnippetRecord s;
    s.id = "p" + std::to_string(i);
    s.source = "x=y";
    s.tokens = {{"x", 0, 1, std::nullopt}, {"=", 1, 2, eq}, {"y", 2, 3, low(rng)}};
    corpus.push_back(std::move(s));
  }
  save_corpus(corpus, dir / "in.jsonl");
  std::ostringstream log;
  REQUIRE(cmd_eval(config_for(dir / "in.jsonl", dir / "out"), log) == 0);
  const auto report = read_json(dir / "out" / "eval.json");
  double eq_score = -1;
  for (const auto& c : report["concepts"]) {
    if (c["key"] == "=") eq_score = c["score"];
  }
  CHECK(eq_score == doctest::Approx(*testkit::sorted_median(planted_eq)).epsilon(0.03));
  CHECK(eq_score >= 0.6);
}

TEST_CASE("eval needs a seed and a non-empty corpus") {
  const fs::path dir = fresh_dir("eval_errors");
  save_corpus({}, dir / "empty.jsonl");
  std::ostringstream log;
  CHECK(cmd_eval(config_for(dir / "empty.jsonl", dir / "out"), log) != 0);
  save_corpus(random_corpus(4, 2), dir / "in.jsonl");
  RunConfig no_seed = config_for(dir / "in.jsonl", dir / "out");
  no_seed.seed.reset();
  CHECK(cmd_eval(no_seed, log) == 2);
  CHECK(log.str().find("seed") != std::string::npos);
}

TEST_CASE("causal writes one row per default treatment that has enough data") {
  const fs::path dir = fresh_dir("causal");
  save_corpus(random_corpus(5, 150), dir / "in.jsonl");
  std::ostringstream log;
  REQUIRE(cmd_causal(config_for(dir / "in.jsonl", dir / "out"), log) == 0);
  const auto doc = read_json(dir / "out" / "causal.json");
  const std::size_t rows = doc["results"].size();
  const std::size_t skipped = doc["warnings"].size();
  CHECK(rows >= 6);
  CHECK(rows + skipped >= default_treatments().size());
  CHECK(doc["config"]["confounders"].size() == 4);
  const std::string csv = slurp(dir / "out" / "causal.csv");
  CHECK(csv.rfind("treatment,category,rho_sequence_size,rho_n_ast_nodes,rho_ast_levels,rho_cyclomatic,rho_loss,ate,n,"
                  "dropped\n",
                  0) == 0);
}

TEST_CASE("causal on a constant-loss corpus warns without failing") {
  const fs::path dir = fresh_dir("causal_const");
  auto corpus = random_corpus(6, 60);
  for (auto& s : corpus) s.loss = 2.0;
  save_corpus(corpus, dir / "in.jsonl");
  std::ostringstream log;
  RunConfig cfg = config_for(dir / "in.jsonl", dir / "out");
  cfg.treatments = {"identifier", "Operators"};
  REQUIRE(cmd_causal(cfg, log) == 0);
  const auto doc = read_json(dir / "out" / "causal.json");
  for (const auto& r : doc["results"]) {
    CHECK(r["ate"] == 0.0);
    CHECK(r["pearson_rho"].is_null());
  }
  CHECK(doc["warnings"].size() >= 2);
}

TEST_CASE("features, eval and causal agree on the same parses") {
  const fs::path dir = fresh_dir("pipeline");
  save_corpus(random_corpus(7, 40), dir / "in.jsonl");
  std::ostringstream log;
  RunConfig cfg = config_for(dir / "in.jsonl", dir / "f");
  REQUIRE(cmd_features(cfg, log) == 0);
  RunConfig raw = config_for(dir / "in.jsonl", dir / "c1");
  raw.treatments = {"identifier"};
  RunConfig enriched = config_for(dir / "f" / "corpus.jsonl", dir / "c2");
  enriched.treatments = {"identifier"};
  REQUIRE(cmd_causal(raw, log) == 0);
  REQUIRE(cmd_causal(enriched, log) == 0);
  CHECK(slurp(dir / "c1" / "causal.csv") == slurp(dir / "c2" / "causal.csv"));
}

TEST_CASE("viz writes one file per snippet and mode plus a manifest") {
  const fs::path dir = fresh_dir("viz");
  auto corpus = random_corpus(8, 1);
  corpus.push_back(testkit::simple_snippet("bad", "def f(:\n", {0.3}));
  save_corpus(corpus, dir / "in.jsonl");
  RunConfig cfg = config_for(dir / "in.jsonl", dir / "a");
  cfg.render_modes = {RenderMode::Partial, RenderMode::Complete};
  cfg.formats = {OutputFormat::Dot};
  std::ostringstream log;
  REQUIRE(cmd_viz(cfg, log) == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) files += e.path().extension() == ".dot";
  CHECK(files == 4);
  const auto manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest["files"].size() == 4);
  CHECK(manifest["errors"].empty());
  CHECK(slurp(dir / "a" / "bad.partial.dot").find("penwidth=3") != std::string::npos);

  cfg.output = dir / "b";
  REQUIRE(cmd_viz(cfg, log) == 0);
  for (const char* name : {"s0.partial.dot", "s0.complete.dot", "bad.partial.dot", "bad.complete.dot"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
}

TEST_CASE("taxonomy export and environment override") {
  const fs::path dir = fresh_dir("taxonomy");
  RunConfig cfg;
  std::ostringstream out;
  REQUIRE(cmd_taxonomy_export(cfg, {}, out) == 0);
  CHECK(out.str() == std::string(default_taxonomy_config()));
  REQUIRE(cmd_taxonomy_export(cfg, dir / "tax.cfg", out) == 0);
  CHECK(load_taxonomy(dir / "tax.cfg").mapping() == Taxonomy::builtin().mapping());

  std::ofstream(dir / "custom.cfg") << "@version = custom-7\nidentifier = Types\n";
  save_corpus(random_corpus(9, 2), dir / "in.jsonl");
  ::setenv(kTaxonomyEnv, (dir / "custom.cfg").c_str(), 1);
  std::ostringstream log;
  RunConfig ev = config_for(dir / "in.jsonl", dir / "out");
  const int rc = cmd_eval(ev, log);
  ::unsetenv(kTaxonomyEnv);
  REQUIRE(rc == 0);
  const auto report = read_json(dir / "out" / "eval.json");
  CHECK(report["config"]["taxonomy_version"] == "custom-7");
  CHECK(report["config"]["taxonomy"] == (dir / "custom.cfg").string());

  // An explicit path wins over the environment.
  ::setenv(kTaxonomyEnv, "/nonexistent/tax.cfg", 1);
  RunConfig explicit_cfg = config_for(dir / "in.jsonl", dir / "out2");
  explicit_cfg.taxonomy = dir / "custom.cfg";
  CHECK(cmd_eval(explicit_cfg, log) == 0);
  RunConfig env_only = config_for(dir / "in.jsonl", dir / "out3");
  CHECK(cmd_eval(env_only, log) != 0);
  ::unsetenv(kTaxonomyEnv);
}

TEST_CASE("binary exit codes") {
  const fs::path dir = fresh_dir("binary");
  save_corpus(random_corpus(10, 3), dir / "in.jsonl");
  const std::string in = (dir / "in.jsonl").string();
  const std::string out = (dir / "out").string();
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("validate -i " + in) == 0);
  CHECK(run_binary("features -i " + in + " -o " + out) == 0);
  CHECK(run_binary("eval -i " + in + " -o " + out + " --seed 3 --resamples 20 --pool snippet") == 0);
  CHECK(run_binary("eval -i " + in + " -o " + out) != 0);
  CHECK(run_binary("eval -i " + in + " -o " + out + " --seed 3 --stat mode") != 0);
  CHECK(run_binary("causal -i " + in + " -o " + out + " --treatments identifier,global") == 0);
  CHECK(run_binary("viz -i " + in + " -o " + out + " --render sequence --format svg,dot") == 0);
  CHECK(run_binary("viz -i " + in + " -o " + out + " --format pdf") == 2);
  CHECK(run_binary("taxonomy export") == 0);
  CHECK(fs::exists(dir / "out" / "s0.sequence.svg"));
}
