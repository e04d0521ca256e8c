#include "ncsol/csv.hpp"

#include "ncsol/errors.hpp"

#include <fmt/format.h>

namespace ncsol {

std::string csv_number(double v) { return fmt::format("{:.17g}", v); }

void CsvTable::add_row(const std::vector<double>& row)
{
    if (row.size() != columns_.size())
        throw DomainError("csv row width does not match header");
    rows_.push_back(row);
}

void CsvTable::write(std::ostream& os) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << csv_number(row[i]);
        os << '\n';
    }
}

} // namespace ncsol
