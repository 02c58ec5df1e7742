#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace asc {

enum class ConceptCategory {
  DataStructures,
  Decision,
  Exceptions,
  FunctionalProgramming,
  Iteration,
  NaturalLanguage,
  Operators,
  Scope,
  Testing,
  Types,
  Errors,
  Uncategorized,
};

inline constexpr std::array<ConceptCategory, 12> kAllCategories = {
    ConceptCategory::DataStructures, ConceptCategory::Decision,        ConceptCategory::Exceptions,
    ConceptCategory::FunctionalProgramming, ConceptCategory::Iteration, ConceptCategory::NaturalLanguage,
    ConceptCategory::Operators,      ConceptCategory::Scope,           ConceptCategory::Testing,
    ConceptCategory::Types,          ConceptCategory::Errors,          ConceptCategory::Uncategorized,
};

std::string_view category_name(ConceptCategory c);
std::optional<ConceptCategory> category_from_name(std::string_view name);

// Total mapping from grammar node types to concept categories. Types not in
// the mapping fall into Uncategorized.
class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::map<std::string, ConceptCategory, std::less<>> mapping, std::string version)
      : mapping_(std::move(mapping)), version_(std::move(version)) {}

  ConceptCategory categorize(std::string_view node_type) const;
  const std::string& version() const noexcept { return version_; }
  const std::map<std::string, ConceptCategory, std::less<>>& mapping() const noexcept { return mapping_; }

  // Serializes back into the config format accepted by parse_taxonomy.
  std::string to_config() const;

  static const Taxonomy& builtin();

 private:
  std::map<std::string, ConceptCategory, std::less<>> mapping_;
  std::string version_;
};

inline ConceptCategory categorize(const Taxonomy& taxonomy, std::string_view node_type) {
  return taxonomy.categorize(node_type);
}

// Config format, one entry per line:
//   # comment
//   @version = <string>
//   <node_type> = <Category>
//   "<node type with spaces or '='>" = <Category>
// Throws ConfigError on unknown categories, duplicate keys or bad lines.
Taxonomy parse_taxonomy(std::string_view text);
Taxonomy load_taxonomy(const std::filesystem::path& path);

std::string_view default_taxonomy_config();

}  // namespace asc
