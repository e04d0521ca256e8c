#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ncsol {

// 17 significant digits: enough to round-trip a double.
std::string csv_number(double v);

// Small column-oriented table written as CSV.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
    void add_row(const std::vector<double>& row);
    void write(std::ostream& os) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

} // namespace ncsol
