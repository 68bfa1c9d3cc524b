#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ftvsr {

// Ordered key=value records; '#' starts a comment line.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_key_values(const std::filesystem::path& path, const KeyValues& values);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

const std::string& require_key(const std::map<std::string, std::string>& values, const std::string& key);
std::size_t require_size(const std::map<std::string, std::string>& values, const std::string& key);
double require_double(const std::map<std::string, std::string>& values, const std::string& key);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

}  // namespace ftvsr
