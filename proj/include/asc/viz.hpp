#pragma once

// Color-coded renderings of annotated trees and token sequences.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asc/asceval.hpp"
#include "asc/corpus.hpp"

namespace asc {

enum class RenderMode { Partial, Complete, Sequence };
enum class OutputFormat { Dot, Svg, Html };

std::string_view render_mode_name(RenderMode mode);
std::string_view format_extension(OutputFormat format);
// Throw ConfigError for unknown names.
RenderMode parse_render_mode(std::string_view name);
OutputFormat parse_output_format(std::string_view name);

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  std::string hex() const;
  bool operator==(const Color&) const = default;
};

inline constexpr Color kColorLow{0xC4, 0x30, 0x2B};
inline constexpr Color kColorMid{0xFF, 0xFF, 0xFF};
inline constexpr Color kColorHigh{0x0B, 0x61, 0xA4};
inline constexpr Color kColorAbsent{0xBF, 0xBF, 0xBF};

// Piecewise linear in RGB: 0 -> low, 0.5 -> mid, 1 -> high. Scores outside
// [0,1] are clamped; absent or NaN scores map to gray.
Color color_of(std::optional<double> score);

struct RenderConfig {
  RenderMode mode = RenderMode::Complete;
  OutputFormat format = OutputFormat::Dot;
  bool show_scores = true;
  int precision = 2;
};

std::string format_score(std::optional<double> score, int precision);

std::string render(const AnnotatedTree& annotated, const std::vector<TokenRecord>& tokens, const RenderConfig& config);

// <id>.<mode>.<ext>, with characters outside [A-Za-z0-9._-] in the id
// replaced by '_'.
std::string render_file_name(std::string_view snippet_id, RenderMode mode, OutputFormat format);

}  // namespace asc
