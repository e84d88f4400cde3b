#pragma once

#include <string>
#include <vector>

namespace flowrec {

// Minimal RFC-4180-ish CSV: comma delimiter, double quotes for fields
// containing commas, quotes, or newlines.
std::vector<std::string> csv_split(const std::string& line);
std::string csv_escape(const std::string& field);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // index of a column name, -1 when absent
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace flowrec
