#include "ftvsr/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace ftvsr {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void write_key_values(const std::filesystem::path& path, const KeyValues& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [key, value] : values) out << key << '=' << value << '\n';
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path.string() + ": expected key=value, got '" + line + "'");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[trim(line.substr(0, eq))] = value;
  }
  return out;
}

const std::string& require_key(const std::map<std::string, std::string>& values, const std::string& key) {
  auto it = values.find(key);
  if (it == values.end()) throw std::runtime_error("missing key '" + key + "'");
  return it->second;
}

std::size_t require_size(const std::map<std::string, std::string>& values, const std::string& key) {
  const auto& text = require_key(values, key);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("key '" + key + "': not a non-negative integer: " + text);
  return out;
}

double require_double(const std::map<std::string, std::string>& values, const std::string& key) {
  const auto& text = require_key(values, key);
  std::size_t consumed = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != text.size()) throw std::runtime_error("key '" + key + "': not a number: " + text);
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buffer, ptr);
}

}  // namespace ftvsr
