#include "umr/taxonomy.hpp"

#include <string>

namespace umr {

ModalityGroup group_of(Category c) noexcept {
  switch (c) {
    case Category::kTextToText:
    case Category::kImageToImage:
      return ModalityGroup::kSingle;
    case Category::kTextToImage:
    case Category::kTextToVisualDoc:
    case Category::kImageToText:
      return ModalityGroup::kCross;
    default:
      return ModalityGroup::kFused;
  }
}

std::string_view group_name(ModalityGroup g) noexcept {
  switch (g) {
    case ModalityGroup::kSingle: return "Single-Modal";
    case ModalityGroup::kCross: return "Cross-Modal";
    case ModalityGroup::kFused: return "Fused-Modal";
  }
  return "";
}

std::string_view category_label(Category c) noexcept {
  switch (c) {
    case Category::kTextToText: return "T->T";
    case Category::kImageToImage: return "I->I";
    case Category::kTextToImage: return "T->I";
    case Category::kTextToVisualDoc: return "T->VD";
    case Category::kImageToText: return "I->T";
    case Category::kTextToFused: return "T->IT";
    case Category::kFusedToText: return "IT->T";
    case Category::kFusedToImage: return "IT->I";
    case Category::kFusedToFused: return "IT->IT";
  }
  return "";
}

std::optional<Category> parse_category(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  std::string ascii(text);
  const std::string arrow = "\xE2\x86\x92";  // U+2192
  if (auto pos = ascii.find(arrow); pos != std::string::npos) ascii.replace(pos, arrow.size(), "->");
  for (Category c : kAllCategories) {
    if (ascii == category_label(c)) return c;
  }
  return std::nullopt;
}

}  // namespace umr
