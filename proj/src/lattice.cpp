#include "ncsol/lattice.hpp"

#include "ncsol/csv.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace ncsol {

std::complex<double> inner(const ComplexVector& u, const ComplexVector& v)
{
    std::complex<double> s{};
    const std::size_t n = std::min(u.size(), v.size());
    for (std::size_t x = 0; x < n; ++x)
        s += std::conj(u[x]) * v[x];
    return s;
}

void write_csv(std::ostream& os, const ComplexVector& v)
{
    os << "x,value_re,value_im\n";
    for (std::size_t x = 0; x < v.size(); ++x)
        os << x << ',' << csv_number(v[x].real()) << ',' << csv_number(v[x].imag()) << '\n';
}

void write_csv(std::ostream& os, const RealVector& v)
{
    os << "x,value_re,value_im\n";
    for (std::size_t x = 0; x < v.size(); ++x)
        os << x << ',' << csv_number(v[x]) << ',' << csv_number(0.0) << '\n';
}

ComplexVector read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,value_re,value_im", 0) != 0)
        throw DomainError("vector csv: missing header x,value_re,value_im");
    std::vector<std::complex<double>> values;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::size_t x = std::stoul(cell);
        std::getline(row, cell, ',');
        double re = std::stod(cell);
        std::getline(row, cell, ',');
        double im = std::stod(cell);
        if (x != values.size())
            throw DomainError("vector csv: rows must be consecutive from x = 0");
        values.emplace_back(re, im);
    }
    return ComplexVector(std::move(values), Tail{});
}

} // namespace ncsol
