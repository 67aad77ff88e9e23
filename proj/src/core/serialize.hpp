#pragma once

#include <iosfwd>
#include <string>

#include "core/mlp.hpp"
#include "core/structured_model.hpp"
#include "core/synthdata.hpp"

namespace anovanet {

// All binary formats: ASCII magic line, 4-byte little-endian header length,
// JSON header, then raw little-endian float64 blocks.

void save_mlp(const Mlp& net, std::ostream& os);
Mlp load_mlp(std::istream& is);
void save_mlp_file(const Mlp& net, const std::string& path);
Mlp load_mlp_file(const std::string& path);

void save_model(const StructuredModel& m, std::ostream& os);
StructuredModel load_model(std::istream& is);
void save_model_file(const StructuredModel& m, const std::string& path);
StructuredModel load_model_file(const std::string& path);

// CSV: header row x1,...,xd,y; values printed with %.17g (round-trip exact).
void save_dataset_csv(const Dataset& ds, std::ostream& os);
Dataset load_dataset_csv(std::istream& is);
void save_dataset_csv_file(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv_file(const std::string& path);

void save_dataset_bin(const Dataset& ds, std::ostream& os);
Dataset load_dataset_bin(std::istream& is);
void save_dataset_bin_file(const Dataset& ds, const std::string& path);
Dataset load_dataset_bin_file(const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace anovanet
