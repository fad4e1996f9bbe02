#pragma once

#include <filesystem>
#include <string>

#include "douba/measures.hpp"

namespace douba {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// Measure files: CSV with header x1,...,xd,weight, one atom per row, '.'
// decimal separator. Grid measures carry a JSON sidecar <stem>.grid.json
// with {"lo":[...],"hi":[...],"cells":[...]}.
std::filesystem::path grid_sidecar_path(const std::filesystem::path& csv_path);

void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& m);
DiscreteMeasure read_measure_csv(const std::filesystem::path& path);

// CSV atom_index,potential.
void write_potentials_csv(const std::filesystem::path& path, const Vector& potentials);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace douba
