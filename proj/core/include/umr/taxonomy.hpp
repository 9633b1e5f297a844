#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace umr {

/// Nine retrieval task types, grouped as single-, cross- and fused-modal.
enum class Category {
  kTextToText,
  kImageToImage,
  kTextToImage,
  kTextToVisualDoc,
  kImageToText,
  kTextToFused,
  kFusedToText,
  kFusedToImage,
  kFusedToFused,
};

inline constexpr std::array<Category, 9> kAllCategories = {
    Category::kTextToText,  Category::kImageToImage,  Category::kTextToImage,
    Category::kTextToVisualDoc, Category::kImageToText, Category::kTextToFused,
    Category::kFusedToText, Category::kFusedToImage,  Category::kFusedToFused,
};

enum class ModalityGroup { kSingle, kCross, kFused };

ModalityGroup group_of(Category c) noexcept;
std::string_view group_name(ModalityGroup g) noexcept;

/// ASCII label, e.g. "IT->IT".
std::string_view category_label(Category c) noexcept;

/// Accepts "T->I", "T→I" and surrounding whitespace.
std::optional<Category> parse_category(std::string_view text);

}  // namespace umr
