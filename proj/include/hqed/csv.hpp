#pragma once

#include <span>
#include <string>
#include <vector>

namespace hqed {

// Shortest-round-trip style fixed formatting, 12 significant digits.
// Output files must be byte-identical across runs, so all float
// serialization funnels through here.
std::string fmt_g12(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);

// Minimal RFC-4180-style reader (no embedded quotes needed for our files).
CsvTable read_csv(const std::string& path);

}  // namespace hqed
