#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace resdeconv {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Ordered key=value record written next to every command output. Keys keep
/// insertion order so the file is byte-stable across runs.
class RunManifest {
 public:
  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  /// The command line, stored as arg.0 .. arg.N.
  void set_args(const std::vector<std::string>& args);
  std::vector<std::string> args() const;

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

}  // namespace resdeconv
