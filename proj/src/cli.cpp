#include "asc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

#include "asc/error.hpp"
#include "asc/parallel.hpp"

namespace asc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare_output(const RunConfig& config) {
  if (config.output.empty()) throw ConfigError("an output directory is required (--output)");
  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec || !fs::is_directory(config.output)) {
    throw IoError("cannot create output directory '" + config.output.string() + "'");
  }
}

std::vector<SnippetRecord> load_input(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("an input corpus is required (--input)");
  return load_corpus(config.input);
}

ordered_json header(const RunConfig& config, std::string_view command, const Taxonomy& taxonomy) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = config_echo(config, command, taxonomy);
  return j;
}

ordered_json issues_json(const std::vector<std::pair<std::string, std::string>>& issues) {
  ordered_json arr = ordered_json::array();
  for (const auto& [id, message] : issues) arr.push_back({{"id", id}, {"message", message}});
  return arr;
}

// Appends a report's fields after the header, keeping the header's own
// schema_version and config.
void append_report(ordered_json& doc, const ordered_json& report) {
  for (const auto& [key, value] : report.items()) {
    if (key != "schema_version" && key != "config") doc[key] = value;
  }
}

std::uint64_t require_seed(const RunConfig& config) {
  if (!config.seed) throw ConfigError("a seed is required for bootstrapped evaluation (--seed)");
  return *config.seed;
}

// Runs a command body, mapping toolkit errors to exit codes: 2 for
// configuration problems, 1 for everything else.
int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

std::string taxonomy_source(const RunConfig& config) {
  if (config.taxonomy) return config.taxonomy->string();
  if (const char* env = std::getenv(kTaxonomyEnv); env != nullptr && *env != '\0') return env;
  return "builtin";
}

Taxonomy resolve_taxonomy(const RunConfig& config) {
  const std::string source = taxonomy_source(config);
  if (source == "builtin" && !config.taxonomy) return Taxonomy::builtin();
  return load_taxonomy(source);
}

ordered_json config_echo(const RunConfig& config, std::string_view command, const Taxonomy& taxonomy) {
  ordered_json j;
  j["command"] = command;
  j["input"] = config.input.string();
  j["output"] = config.output.string();
  j["taxonomy"] = taxonomy_source(config);
  j["stat"] = stat_name(config.stat.kind);
  j["mode"] = mode_name(config.stat.mode);
  j["resamples"] = config.resamples;
  j["seed"] = config.seed ? ordered_json(*config.seed) : ordered_json(nullptr);
  j["pool"] = pool_name(config.pool);
  j["treatments"] = config.treatments;
  j["confounders"] = config.confounders;
  ordered_json modes = ordered_json::array();
  for (RenderMode m : config.render_modes) modes.push_back(render_mode_name(m));
  j["render"] = std::move(modes);
  ordered_json formats = ordered_json::array();
  for (OutputFormat f : config.formats) formats.push_back(format_extension(f));
  j["formats"] = std::move(formats);
  j["show_scores"] = config.show_scores;
  j["precision"] = config.precision;
  j["workers"] = config.workers;
  j["skip_whitespace_tokens"] = config.skip_whitespace_tokens;
  j["thresholds"] = {{"confident", kConfidentThreshold}, {"erroneous", kErroneousThreshold}};
  j["probability_floor"] = kProbabilityFloor;
  j["grammar_version"] = kGrammarVersion;
  j["taxonomy_version"] = taxonomy.version();
  return j;
}

int cmd_features(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Taxonomy taxonomy = resolve_taxonomy(config);
    std::vector<SnippetRecord> corpus = load_input(config);
    prepare_output(config);

    std::vector<std::string> notes(corpus.size());
    parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
      SnippetRecord& s = corpus[i];
      const SyntaxTree tree = parse(s.source);
      s.features = compute_features(s.source, tree, s.tokens);
      if (!s.loss) {
        try {
          s.loss = cross_entropy(s.tokens);
        } catch (const NumericError& e) {
          notes[i] = e.what();
        }
      }
    });

    std::vector<std::pair<std::string, std::string>> warnings;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!notes[i].empty()) warnings.emplace_back(corpus[i].id, "loss left empty: " + notes[i]);
    }
    save_corpus(corpus, config.output / "corpus.jsonl");

    ordered_json doc = header(config, "features", taxonomy);
    doc["snippets"] = corpus.size();
    doc["outputs"] = {"corpus.jsonl"};
    doc["warnings"] = issues_json(warnings);
    doc["errors"] = ordered_json::array();
    write_json(config.output / "features.json", doc);
    for (const auto& [id, message] : warnings) log << "warning: " << id << ": " << message << '\n';
    return 0;
  });
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Taxonomy taxonomy = resolve_taxonomy(config);
    const std::uint64_t seed = require_seed(config);
    const std::vector<SnippetRecord> corpus = load_input(config);
    if (corpus.empty()) throw ConfigError("the input corpus is empty");
    prepare_output(config);

    GlobalOptions options;
    options.resamples = config.resamples;
    options.seed = seed;
    options.pool = config.pool;
    options.workers = config.workers;
    options.align.skip_whitespace_tokens = config.skip_whitespace_tokens;
    const EvalReport report = global_eval(corpus, taxonomy, config.stat, options);

    ordered_json doc = header(config, "eval", taxonomy);
    append_report(doc, to_json(report));
    write_json(config.output / "eval.json", doc);
    write_text(config.output / "eval.csv", to_csv(report));

    if (config.per_snippet || config.dump_alignment) {
      std::vector<ordered_json> reports(corpus.size());
      std::vector<std::string> alignments(corpus.size());
      parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
        const SnippetRecord& s = corpus[i];
        const SyntaxTree tree = parse(s.source);
        const Alignment alignment = align(tree, s.tokens, options.align);
        if (config.per_snippet) {
          const AnnotatedTree annotated = annotate(tree, alignment, s.tokens, taxonomy, config.stat);
          reports[i] = header(config, "eval", taxonomy);
          append_report(reports[i], to_json(snippet_report(annotated, s.id, taxonomy)));
        }
        if (config.dump_alignment) {
          ordered_json line;
          line["id"] = s.id;
          line["alignment"] = alignment.to_json();
          alignments[i] = line.dump() + "\n";
        }
      });
      if (config.per_snippet) {
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          std::string name = render_file_name(corpus[i].id, RenderMode::Complete, OutputFormat::Dot);
          name = name.substr(0, name.size() - std::string_view(".complete.dot").size()) + ".eval.json";
          write_json(config.output / "snippets" / name, reports[i]);
        }
      }
      if (config.dump_alignment) {
        std::string all;
        for (const std::string& a : alignments) all += a;
        write_text(config.output / "alignment.jsonl", all);
      }
    }
    for (const EvalWarning& w : report.warnings) log << "warning: " << w.key << ": " << w.message << '\n';
    return 0;
  });
}

int cmd_causal(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Taxonomy taxonomy = resolve_taxonomy(config);
    const std::vector<SnippetRecord> corpus = load_input(config);
    if (corpus.empty()) throw ConfigError("the input corpus is empty");
    if (config.treatments.empty()) throw ConfigError("no treatments given");
    prepare_output(config);

    CausalOptions options;
    options.stat = config.stat;
    options.confounders = config.confounders;
    options.workers = config.workers;
    options.align.skip_whitespace_tokens = config.skip_whitespace_tokens;
    const CausalSuite suite = run_causal_suite(corpus, taxonomy, config.treatments, options);

    ordered_json doc = header(config, "causal", taxonomy);
    append_report(doc, to_json(suite, options, taxonomy));
    write_json(config.output / "causal.json", doc);
    write_text(config.output / "causal.csv", to_csv(suite, options.confounders));
    for (const CausalWarning& w : suite.warnings) log << "warning: " << w.subject << ": " << w.message << '\n';
    return 0;
  });
}

int cmd_viz(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Taxonomy taxonomy = resolve_taxonomy(config);
    const std::vector<SnippetRecord> corpus = load_input(config);
    if (config.render_modes.empty() || config.formats.empty()) throw ConfigError("nothing to render");
    prepare_output(config);

    struct Rendered {
      std::vector<std::pair<std::string, std::string>> files;  // name, content
      std::string error;
    };
    std::vector<Rendered> out(corpus.size());
    AlignOptions align_options;
    align_options.skip_whitespace_tokens = config.skip_whitespace_tokens;
    parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
      try {
        const AnnotatedTree annotated = analyze_snippet(corpus[i], taxonomy, config.stat, align_options);
        for (RenderMode mode : config.render_modes) {
          for (OutputFormat format : config.formats) {
            RenderConfig rc{mode, format, config.show_scores, config.precision};
            out[i].files.emplace_back(render_file_name(corpus[i].id, mode, format),
                                      render(annotated, corpus[i].tokens, rc));
          }
        }
      } catch (const Error& e) {
        out[i].files.clear();
        out[i].error = e.what();
      }
    });

    ordered_json files = ordered_json::array();
    std::vector<std::pair<std::string, std::string>> errors;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!out[i].error.empty()) {
        errors.emplace_back(corpus[i].id, out[i].error);
        continue;
      }
      for (const auto& [name, content] : out[i].files) {
        if (!seen.insert(name).second) {
          errors.emplace_back(corpus[i].id, "file name collision: " + name);
          continue;
        }
        write_text(config.output / name, content);
        files.push_back({{"id", corpus[i].id}, {"file", name}});
      }
    }
    ordered_json doc = header(config, "viz", taxonomy);
    doc["snippets"] = corpus.size();
    doc["files"] = std::move(files);
    doc["errors"] = issues_json(errors);
    write_json(config.output / "manifest.json", doc);
    for (const auto& [id, message] : errors) log << "error: " << id << ": " << message << '\n';
    return errors.empty() ? 0 : 1;
  });
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (config.input.empty()) throw ConfigError("an input corpus is required (--input)");
    std::ifstream in(config.input, std::ios::binary);
    if (!in) throw IoError("cannot open corpus '" + config.input.string() + "'");

    ordered_json problems = ordered_json::array();
    std::set<std::string> ids;
    std::size_t records = 0, invalid = 0, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++records;
      std::vector<Violation> violations;
      std::string id;
      try {
        const SnippetRecord r = snippet_from_json(nlohmann::json::parse(line), line_no);
        id = r.id;
        violations = validate(r);
        if (!ids.insert(r.id).second) violations.push_back({std::string(rules::kDuplicateId), "record"});
      } catch (const nlohmann::json::parse_error& e) {
        violations.push_back({"malformed record", e.what()});
      } catch (const FormatError& e) {
        violations.push_back({"malformed record", e.what()});
      }
      if (violations.empty()) continue;
      ++invalid;
      for (const Violation& v : violations) {
        out << "line " << line_no << (id.empty() ? "" : " (" + id + ")") << ": " << v.rule << " at " << v.location
            << '\n';
        problems.push_back({{"line", line_no}, {"id", id}, {"rule", v.rule}, {"location", v.location}});
      }
    }
    out << records << " records, " << invalid << " invalid\n";
    if (!config.output.empty()) {
      prepare_output(config);
      ordered_json doc = header(config, "validate", resolve_taxonomy(config));
      doc["records"] = records;
      doc["invalid"] = invalid;
      doc["violations"] = std::move(problems);
      write_json(config.output / "validation.json", doc);
    }
    return invalid == 0 ? 0 : 1;
  });
}

int cmd_taxonomy_export(const RunConfig& config, const fs::path& destination, std::ostream& out) {
  return guarded(out, [&] {
    const bool builtin = taxonomy_source(config) == "builtin";
    const std::string text = builtin ? std::string(default_taxonomy_config()) : resolve_taxonomy(config).to_config();
    if (destination.empty()) {
      out << text;
    } else {
      write_text(destination, text);
    }
    return 0;
  });
}

}  // namespace asc
