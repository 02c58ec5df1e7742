#include "asc/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "asc/error.hpp"

namespace asc {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kKnownKeys[] = {"id", "source", "tokens", "loss", "features", "metadata"};

bool is_known_key(const std::string& key) {
  for (const char* k : kKnownKeys) {
    if (key == k) return true;
  }
  return false;
}

std::uint32_t require_offset(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) throw FormatError(line, field, "missing");
  const json& v = j.at(field);
  if (!v.is_number_integer()) throw FormatError(line, field, "expected a non-negative integer");
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > UINT32_MAX) throw FormatError(line, field, "offset too large");
    return static_cast<std::uint32_t>(u);
  }
  auto s = v.get<std::int64_t>();
  if (s < 0 || s > static_cast<std::int64_t>(UINT32_MAX)) {
    throw FormatError(line, field, "expected a non-negative integer");
  }
  return static_cast<std::uint32_t>(s);
}

std::optional<double> optional_number(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  if (!j.at(field).is_number()) throw FormatError(line, field, "expected a number or null");
  return j.at(field).get<double>();
}

std::int64_t require_count(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) throw FormatError(line, std::string("features.") + field, "missing");
  if (!j.at(field).is_number_integer()) {
    throw FormatError(line, std::string("features.") + field, "expected an integer");
  }
  return j.at(field).get<std::int64_t>();
}

void check_token(const SnippetRecord& r, std::size_t i, const TokenRecord* prev, std::vector<Violation>& out) {
  const TokenRecord& t = r.tokens[i];
  const std::string where = "tokens[" + std::to_string(i) + "]";
  if (t.start_byte >= t.end_byte) {
    out.push_back({std::string(rules::kEmptySpan), where});
  }
  if (t.end_byte > r.source.size() || t.start_byte > r.source.size()) {
    out.push_back({std::string(rules::kSpanOutOfSource), where});
  } else if (t.start_byte < t.end_byte &&
             std::string_view(r.source).substr(t.start_byte, t.end_byte - t.start_byte) != t.text) {
    out.push_back({std::string(rules::kTextMismatch), where});
  }
  if (prev != nullptr && t.start_byte < prev->end_byte) {
    out.push_back({std::string(rules::kSpansOverlap), where});
  }
  if (t.ntp && !(*t.ntp >= 0.0 && *t.ntp <= 1.0)) {
    out.push_back({std::string(rules::kNtpRange), where});
  }
}

}  // namespace

std::optional<std::size_t> find_invalid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return i;
    }
    i += len;
  }
  return std::nullopt;
}

std::vector<Violation> validate(const SnippetRecord& record) {
  std::vector<Violation> out;
  if (record.id.empty()) out.push_back({std::string(rules::kEmptyId), "id"});
  if (auto bad = find_invalid_utf8(record.source)) {
    out.push_back({std::string(rules::kInvalidUtf8), "source byte " + std::to_string(*bad)});
  }
  const TokenRecord* prev = nullptr;
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    check_token(record, i, prev, out);
    prev = &record.tokens[i];
  }
  if (record.loss && !(*record.loss >= 0.0 && std::isfinite(*record.loss))) {
    out.push_back({std::string(rules::kNegativeLoss), "loss"});
  }
  if (record.features) {
    const CodeFeatures& f = *record.features;
    const std::pair<const char*, std::int64_t> counts[] = {
        {"loc", f.loc},
        {"whitespace_count", f.whitespace_count},
        {"token_count", f.token_count},
        {"n_ast_nodes", f.n_ast_nodes},
        {"ast_levels", f.ast_levels},
        {"ast_errors", f.ast_errors},
        {"cyclomatic", f.cyclomatic},
        {"sequence_size", f.sequence_size},
    };
    for (const auto& [name, value] : counts) {
      if (value < 0) out.push_back({std::string(rules::kFeatureRange), std::string("features.") + name});
    }
    if (f.sequence_size > f.token_count) {
      out.push_back({std::string(rules::kFeatureRange), "features.sequence_size"});
    }
    if (!record.source.empty() && f.cyclomatic < 1) {
      out.push_back({std::string(rules::kFeatureRange), "features.cyclomatic"});
    }
  }
  return out;
}

ordered_json to_json(const CodeFeatures& f) {
  ordered_json j;
  j["loc"] = f.loc;
  j["whitespace_count"] = f.whitespace_count;
  j["token_count"] = f.token_count;
  j["n_ast_nodes"] = f.n_ast_nodes;
  j["ast_levels"] = f.ast_levels;
  j["ast_errors"] = f.ast_errors;
  j["cyclomatic"] = f.cyclomatic;
  j["sequence_size"] = f.sequence_size;
  return j;
}

CodeFeatures features_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw FormatError(line, "features", "expected an object or null");
  CodeFeatures f;
  f.loc = require_count(j, "loc", line);
  f.whitespace_count = require_count(j, "whitespace_count", line);
  f.token_count = require_count(j, "token_count", line);
  f.n_ast_nodes = require_count(j, "n_ast_nodes", line);
  f.ast_levels = require_count(j, "ast_levels", line);
  f.ast_errors = require_count(j, "ast_errors", line);
  f.cyclomatic = require_count(j, "cyclomatic", line);
  f.sequence_size = require_count(j, "sequence_size", line);
  return f;
}

ordered_json to_json(const SnippetRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["source"] = r.source;
  ordered_json tokens = ordered_json::array();
  for (const TokenRecord& t : r.tokens) {
    ordered_json tj;
    tj["text"] = t.text;
    tj["start_byte"] = t.start_byte;
    tj["end_byte"] = t.end_byte;
    tj["ntp"] = t.ntp ? ordered_json(*t.ntp) : ordered_json(nullptr);
    tokens.push_back(std::move(tj));
  }
  j["tokens"] = std::move(tokens);
  j["loss"] = r.loss ? ordered_json(*r.loss) : ordered_json(nullptr);
  j["features"] = r.features ? to_json(*r.features) : ordered_json(nullptr);
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j;
}

SnippetRecord snippet_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw FormatError(line, "<record>", "expected a JSON object");
  SnippetRecord r;

  if (!j.contains("id") || !j.at("id").is_string()) throw FormatError(line, "id", "expected a string");
  r.id = j.at("id").get<std::string>();
  if (!j.contains("source") || !j.at("source").is_string()) {
    throw FormatError(line, "source", "expected a string");
  }
  r.source = j.at("source").get<std::string>();

  if (!j.contains("tokens") || !j.at("tokens").is_array()) {
    throw FormatError(line, "tokens", "expected an array");
  }
  const json& tokens = j.at("tokens");
  r.tokens.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const json& tj = tokens[i];
    const std::string field = "tokens[" + std::to_string(i) + "]";
    if (!tj.is_object()) throw FormatError(line, field, "expected an object");
    TokenRecord t;
    if (!tj.contains("text") || !tj.at("text").is_string()) {
      throw FormatError(line, field + ".text", "expected a string");
    }
    t.text = tj.at("text").get<std::string>();
    t.start_byte = require_offset(tj, "start_byte", line);
    t.end_byte = require_offset(tj, "end_byte", line);
    if (tj.contains("ntp") && !tj.at("ntp").is_null()) {
      if (!tj.at("ntp").is_number()) throw FormatError(line, field + ".ntp", "expected a number or null");
      t.ntp = tj.at("ntp").get<double>();
    }
    r.tokens.push_back(std::move(t));
  }

  r.loss = optional_number(j, "loss", line);
  if (j.contains("features") && !j.at("features").is_null()) {
    r.features = features_from_json(j.at("features"), line);
  }
  if (j.contains("metadata") && !j.at("metadata").is_null()) {
    const json& meta = j.at("metadata");
    if (!meta.is_object()) throw FormatError(line, "metadata", "expected a string map");
    for (const auto& [k, v] : meta.items()) {
      if (!v.is_string()) throw FormatError(line, "metadata." + k, "expected a string");
      r.metadata.emplace(k, v.get<std::string>());
    }
  }
  for (const auto& [k, v] : j.items()) {
    if (!is_known_key(k)) r.extra[k] = v;
  }
  return r;
}

std::vector<SnippetRecord> parse_corpus(std::string_view text) {
  std::vector<SnippetRecord> out;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_no, "<record>", e.what());
    }
    SnippetRecord r = snippet_from_json(j, line_no);
    auto violations = validate(r);
    if (!violations.empty()) {
      throw ValidationError(r.id, violations.front().rule, violations.front().location);
    }
    if (!ids.insert(r.id).second) {
      throw ValidationError(r.id, std::string(rules::kDuplicateId), "line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SnippetRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string serialize_corpus(const std::vector<SnippetRecord>& records) {
  std::string out;
  for (const SnippetRecord& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const std::vector<SnippetRecord>& records, const std::filesystem::path& path) {
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) throw IoError("cannot write corpus '" + path.string() + "'");
  outf << serialize_corpus(records);
  outf.flush();
  if (!outf) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace asc
