#include "resdeconv/manifest.hpp"

#include "resdeconv/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace resdeconv {

void RunManifest::set(std::string key, std::string value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos) {
    throw std::invalid_argument("manifest key '" + key + "' is not valid");
  }
  if (value.find('\n') != std::string::npos) {
    throw std::invalid_argument("manifest value for '" + key + "' contains a newline");
  }
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> RunManifest::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void RunManifest::set_args(const std::vector<std::string>& args) {
  set("arg.count", std::to_string(args.size()));
  for (std::size_t i = 0; i < args.size(); ++i) set("arg." + std::to_string(i), args[i]);
}

std::vector<std::string> RunManifest::args() const {
  const auto count = get("arg.count");
  if (!count) throw std::invalid_argument("manifest has no recorded command line");
  const std::size_t n = std::stoul(*count);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = get("arg." + std::to_string(i));
    if (!a) throw std::invalid_argument("manifest is missing arg." + std::to_string(i));
    out.push_back(std::move(*a));
  }
  return out;
}

std::string RunManifest::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_string();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed manifest line: " + line);
    m.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace resdeconv
