#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mirsel {

inline constexpr const char* kTecatorHost = "lib.stat.cmu.edu";
inline constexpr const char* kTecatorPath = "/datasets/tecator";

/// Extracts the 215 records (100 absorbances + fat) from the StatLib text
/// archive. The data block is the trailing run of purely numeric lines;
/// each record holds 125 numbers, fat being the 124th.
std::vector<std::vector<double>> parse_tecator_archive(const std::string& text);

/// Writes tecator.csv, tecator_split.json (rows 0..171 train, 172..214 test)
/// and the tecator.json manifest into `dir`.
void write_tecator(const std::filesystem::path& dir, const std::vector<std::vector<double>>& rows);

}  // namespace mirsel
