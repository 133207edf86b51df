#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

namespace copref {

inline constexpr std::size_t kMaxKeywordLength = 64;
inline constexpr std::size_t kMaxPanelEntries = 256;

/// A keyword in canonical form: ASCII-lowercased, trimmed, and with internal
/// whitespace runs collapsed to a single space. Length is counted in UTF-8
/// code points.
class Keyword {
 public:
  static Keyword normalize(std::string_view raw);

  const std::string& str() const { return text_; }

  friend auto operator<=>(const Keyword&, const Keyword&) = default;

 private:
  explicit Keyword(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

}  // namespace copref
