#pragma once

// Strict YAML accessors shared by the manifest readers.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "umr/error.hpp"

namespace umr::io::detail {

class YamlReader {
 public:
  YamlReader(std::string source, std::filesystem::path base_dir)
      : source_(std::move(source)), base_dir_(std::move(base_dir)) {}

  /// Parses a document; syntax errors become SchemaError at their line.
  YAML::Node load(std::string_view text) const;

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const;

  /// Requires a mapping whose keys are all in `allowed` (no repeats).
  void expect_map(const YAML::Node& node, std::string_view what, std::initializer_list<std::string_view> allowed) const;
  void expect_seq(const YAML::Node& node, std::string_view what) const;
  void require(const YAML::Node& map, std::string_view key) const;

  std::string str(const YAML::Node& node, std::string_view what) const;
  std::uint64_t uint(const YAML::Node& node, std::string_view what) const;
  double real(const YAML::Node& node, std::string_view what) const;
  bool boolean(const YAML::Node& node, std::string_view what) const;
  std::filesystem::path path(const YAML::Node& node, std::string_view what) const;

  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
  std::filesystem::path base_dir_;
};

}  // namespace umr::io::detail
