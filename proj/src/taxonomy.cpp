#include "asc/taxonomy.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "asc/error.hpp"

namespace asc {

namespace {

constexpr std::string_view kDefaultConfig = R"cfg(# Node type -> Abstract Syntax Concept category for Python.
# Node types follow the tree-sitter Python grammar vocabulary; anonymous
# tokens (keywords, punctuation) are listed by their literal text.
@version = asc-python-default-1

# --- Iteration
for_statement = Iteration
while_statement = Iteration
break_statement = Iteration
continue_statement = Iteration
"for" = Iteration
"while" = Iteration

# --- Decision
if_statement = Decision
elif_clause = Decision
else_clause = Decision
conditional_expression = Decision
match_statement = Decision
case_clause = Decision
case_pattern = Decision
union_pattern = Decision
class_pattern = Decision
keyword_pattern = Decision
splat_pattern = Decision
dict_pattern = Decision
complex_pattern = Decision
"if" = Decision
"elif" = Decision
"else" = Decision
"match" = Decision
"case" = Decision
"_" = Decision

# --- Exceptions (including context managers)
try_statement = Exceptions
except_clause = Exceptions
except_group_clause = Exceptions
finally_clause = Exceptions
raise_statement = Exceptions
with_statement = Exceptions
with_clause = Exceptions
with_item = Exceptions
as_pattern = Exceptions
as_pattern_target = Exceptions
"try" = Exceptions
"except" = Exceptions
"except*" = Exceptions
"finally" = Exceptions
"raise" = Exceptions
"with" = Exceptions

# --- Testing
assert_statement = Testing
"assert" = Testing

# --- Functional programming
lambda = FunctionalProgramming
lambda_parameters = FunctionalProgramming
for_in_clause = FunctionalProgramming
if_clause = FunctionalProgramming
list_comprehension = FunctionalProgramming
set_comprehension = FunctionalProgramming
dictionary_comprehension = FunctionalProgramming
generator_expression = FunctionalProgramming
yield = FunctionalProgramming
await = FunctionalProgramming
call = FunctionalProgramming
argument_list = FunctionalProgramming
keyword_argument = FunctionalProgramming
decorator = FunctionalProgramming
decorated_definition = FunctionalProgramming
"async" = FunctionalProgramming

# --- Natural language
identifier = NaturalLanguage
string = NaturalLanguage
concatenated_string = NaturalLanguage
string_start = NaturalLanguage
string_content = NaturalLanguage
string_end = NaturalLanguage
escape_sequence = NaturalLanguage
escape_interpolation = NaturalLanguage
interpolation = NaturalLanguage
format_specifier = NaturalLanguage
type_conversion = NaturalLanguage
comment = NaturalLanguage
dotted_name = NaturalLanguage

# --- Types and literals
type = Types
generic_type = Types
union_type = Types
splat_type = Types
type_parameter = Types
typed_parameter = Types
typed_default_parameter = Types
type_alias_statement = Types
integer = Types
float = Types
true = Types
false = Types
none = Types
ellipsis = Types
"->" = Types

# --- Operators
binary_operator = Operators
unary_operator = Operators
comparison_operator = Operators
boolean_operator = Operators
not_operator = Operators
named_expression = Operators
assignment = Operators
augmented_assignment = Operators
"and" = Operators
"or" = Operators
"not" = Operators
"is" = Operators
"in" = Operators
"not in" = Operators
"is not" = Operators
"=" = Operators
":=" = Operators
"+" = Operators
"-" = Operators
"*" = Operators
"/" = Operators
"//" = Operators
"%" = Operators
"**" = Operators
"|" = Operators
"&" = Operators
"^" = Operators
"~" = Operators
"<<" = Operators
">>" = Operators
"<" = Operators
">" = Operators
"<=" = Operators
">=" = Operators
"==" = Operators
"!=" = Operators
"<>" = Operators
"+=" = Operators
"-=" = Operators
"*=" = Operators
"/=" = Operators
"//=" = Operators
"%=" = Operators
"**=" = Operators
">>=" = Operators
"<<=" = Operators
"&=" = Operators
"^=" = Operators
"|=" = Operators
"@=" = Operators

# --- Data structures
list = DataStructures
tuple = DataStructures
set = DataStructures
dictionary = DataStructures
pair = DataStructures
subscript = DataStructures
slice = DataStructures
attribute = DataStructures
list_splat = DataStructures
dictionary_splat = DataStructures
list_splat_pattern = DataStructures
dictionary_splat_pattern = DataStructures
expression_list = DataStructures
pattern_list = DataStructures
tuple_pattern = DataStructures
list_pattern = DataStructures
parenthesized_expression = DataStructures

# --- Scope: definitions, namespaces, block delimiters
module = Scope
block = Scope
function_definition = Scope
class_definition = Scope
parameters = Scope
default_parameter = Scope
keyword_separator = Scope
positional_separator = Scope
return_statement = Scope
global_statement = Scope
nonlocal_statement = Scope
import_statement = Scope
import_from_statement = Scope
future_import_statement = Scope
aliased_import = Scope
relative_import = Scope
import_prefix = Scope
wildcard_import = Scope
"(" = Scope
")" = Scope
"[" = Scope
"]" = Scope
"{" = Scope
"}" = Scope
":" = Scope
"," = Scope
";" = Scope
"." = Scope
"@" = Scope
"def" = Scope
"class" = Scope
"return" = Scope
"global" = Scope
"nonlocal" = Scope
"import" = Scope
"from" = Scope
"as" = Scope
"__future__" = Scope

# --- Parse errors
ERROR = Errors

# --- Deliberately uncategorized
expression_statement = Uncategorized
pass_statement = Uncategorized
delete_statement = Uncategorized
line_continuation = Uncategorized
"del" = Uncategorized
)cfg";

constexpr std::array<std::string_view, 12> kCategoryNames = {
    "DataStructures", "Decision", "Exceptions", "FunctionalProgramming", "Iteration", "NaturalLanguage",
    "Operators",      "Scope",    "Testing",    "Types",                 "Errors",    "Uncategorized",
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view key, std::size_t line) {
  if (key.size() < 2 || key.front() != '"' || key.back() != '"') {
    if (key.find_first_of(" \t\"") != std::string_view::npos) {
      throw ConfigError("taxonomy line " + std::to_string(line) + ": keys with spaces or quotes must be quoted");
    }
    return std::string(key);
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < key.size(); ++i) {
    if (key[i] == '\\' && i + 2 < key.size()) {
      out += key[++i];
    } else {
      out += key[i];
    }
  }
  return out;
}

bool needs_quotes(std::string_view key) {
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return true;
  }
  return key.empty() || key.front() == '@';
}

}  // namespace

std::string_view category_name(ConceptCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<ConceptCategory> category_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<ConceptCategory>(i);
  }
  return std::nullopt;
}

ConceptCategory Taxonomy::categorize(std::string_view node_type) const {
  auto it = mapping_.find(node_type);
  return it == mapping_.end() ? ConceptCategory::Uncategorized : it->second;
}

std::string Taxonomy::to_config() const {
  std::string out = "@version = " + version_ + "\n";
  for (const auto& [key, cat] : mapping_) {
    if (needs_quotes(key)) {
      out += '"';
      for (char c : key) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
    } else {
      out += key;
    }
    out += " = ";
    out += category_name(cat);
    out += '\n';
  }
  return out;
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy kBuiltin = parse_taxonomy(kDefaultConfig);
  return kBuiltin;
}

Taxonomy parse_taxonomy(std::string_view text) {
  std::map<std::string, ConceptCategory, std::less<>> mapping;
  std::string version = "unversioned";
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto eq = line.rfind('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("taxonomy line " + std::to_string(line_no) + ": expected '<node_type> = <Category>'");
    }
    std::string_view raw_key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (raw_key.empty()) throw ConfigError("taxonomy line " + std::to_string(line_no) + ": empty node type");

    if (raw_key == "@version") {
      version = std::string(value);
      continue;
    }
    std::string key = unquote(raw_key, line_no);
    auto cat = category_from_name(value);
    if (!cat) {
      throw ConfigError("taxonomy line " + std::to_string(line_no) + ": unknown category '" + std::string(value) + "'");
    }
    if (!mapping.emplace(key, *cat).second) {
      throw ConfigError("taxonomy line " + std::to_string(line_no) + ": duplicate node type '" + key + "'");
    }
  }
  return Taxonomy(std::move(mapping), std::move(version));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_taxonomy(buf.str());
}

std::string_view default_taxonomy_config() { return kDefaultConfig; }

}  // namespace asc
