#include "yaml_util.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace umr::io::detail {

namespace {

std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

}  // namespace

YAML::Node YamlReader::load(std::string_view text) const {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    const std::size_t line = e.mark.line < 0 ? 0 : static_cast<std::size_t>(e.mark.line) + 1;
    throw SchemaError(source_, line, "YAML syntax: " + e.msg);
  }
}

void YamlReader::fail(const YAML::Node& at, const std::string& msg) const {
  throw SchemaError(source_, line_of(at), msg);
}

void YamlReader::expect_map(const YAML::Node& node, std::string_view what,
                            std::initializer_list<std::string_view> allowed) const {
  if (!node.IsMap()) fail(node, std::string(what) + " must be a mapping");
  std::set<std::string> seen;
  for (const auto& kv : node) {
    if (!kv.first.IsScalar()) fail(kv.first, std::string(what) + " has a non-scalar key");
    const auto key = kv.first.Scalar();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) fail(kv.first, "unknown key '" + key + "' in " + std::string(what));
    if (!seen.insert(key).second) fail(kv.first, "key '" + key + "' repeated in " + std::string(what));
  }
}

void YamlReader::expect_seq(const YAML::Node& node, std::string_view what) const {
  if (!node.IsSequence()) fail(node, std::string(what) + " must be a list");
}

void YamlReader::require(const YAML::Node& map, std::string_view key) const {
  if (!map[std::string(key)]) fail(map, "missing required key '" + std::string(key) + "'");
}

std::string YamlReader::str(const YAML::Node& node, std::string_view what) const {
  if (!node.IsScalar()) fail(node, std::string(what) + " must be a string");
  return node.Scalar();
}

std::uint64_t YamlReader::uint(const YAML::Node& node, std::string_view what) const {
  if (!node.IsScalar()) fail(node, std::string(what) + " must be a non-negative integer");
  const std::string& s = node.Scalar();
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(node, std::string(what) + " must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

double YamlReader::real(const YAML::Node& node, std::string_view what) const {
  if (!node.IsScalar()) fail(node, std::string(what) + " must be a number");
  double v = 0.0;
  try {
    v = node.as<double>();
  } catch (const YAML::Exception&) {
    fail(node, std::string(what) + " must be a number, got '" + node.Scalar() + "'");
  }
  if (!std::isfinite(v)) fail(node, std::string(what) + " must be finite");
  return v;
}

bool YamlReader::boolean(const YAML::Node& node, std::string_view what) const {
  if (!node.IsScalar()) fail(node, std::string(what) + " must be true or false");
  const std::string& s = node.Scalar();
  if (s == "true") return true;
  if (s == "false") return false;
  fail(node, std::string(what) + " must be true or false, got '" + s + "'");
}

std::filesystem::path YamlReader::path(const YAML::Node& node, std::string_view what) const {
  std::filesystem::path p = str(node, what);
  if (p.empty()) fail(node, std::string(what) + " is empty");
  return p.is_absolute() ? p : (base_dir_ / p).lexically_normal();
}

}  // namespace umr::io::detail
