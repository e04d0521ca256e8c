#include "config.hpp"

#include "ncsol/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ncsol::cli {

namespace {

namespace pt = boost::property_tree;

KeySpec real_key(std::string name, std::optional<std::string> fallback, double lo, double hi, std::string help)
{
    return {std::move(name), KeyKind::real, std::move(fallback), lo, hi, std::move(help)};
}
KeySpec int_key(std::string name, std::optional<std::string> fallback, double lo, double hi, std::string help)
{
    return {std::move(name), KeyKind::integer, std::move(fallback), lo, hi, std::move(help)};
}
KeySpec list_key(std::string name, std::optional<std::string> fallback, double lo, double hi, std::string help)
{
    return {std::move(name), KeyKind::integer_list, std::move(fallback), lo, hi, std::move(help)};
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& s)
{
    double v = 0.0;
    const auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        return std::nullopt;
    return v;
}

std::optional<long> parse_integer(const std::string& s)
{
    long v = 0;
    const auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        return std::nullopt;
    return v;
}

std::optional<std::vector<int>> parse_list(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty())
            continue;
        auto v = parse_integer(item);
        if (!v)
            return std::nullopt;
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

// Returns an error message or an empty string.
std::string validate(const CommandSchema& schema, const KeySpec& k, const std::string& raw)
{
    const std::string where = schema.command + "." + k.name;
    auto range = [&](double v) {
        return v >= k.min && v <= k.max ? std::string{}
                                        : fmt::format("{} = {} is outside [{}, {}]", where, trim(raw), k.min, k.max);
    };
    switch (k.kind) {
    case KeyKind::real: {
        auto v = parse_real(raw);
        return v ? range(*v) : fmt::format("{} = '{}' is not a number", where, trim(raw));
    }
    case KeyKind::integer: {
        auto v = parse_integer(raw);
        return v ? range(static_cast<double>(*v)) : fmt::format("{} = '{}' is not an integer", where, trim(raw));
    }
    case KeyKind::integer_list: {
        auto v = parse_list(raw);
        if (!v)
            return fmt::format("{} = '{}' is not a comma-separated integer list", where, trim(raw));
        for (int x : *v)
            if (auto msg = range(x); !msg.empty())
                return msg;
        return {};
    }
    }
    return {};
}

} // namespace

const std::vector<CommandSchema>& schemas()
{
    static const std::vector<CommandSchema> all = {
        {"soliton",
         "ground state of L0 u + mu u = u^(2 sigma + 1) and its invariants",
         {
             real_key("mu", std::nullopt, 10.0, 1e4, "soliton parameter"),
             int_key("sigma", "1", 1, 3, "nonlinearity exponent"),
         }},
        {"spectrum",
         "spectral tables of L0 (q = 0) or L = L0 - q P0, completeness and the bound state",
         {
             real_key("q", "2", 0.0, 1e3, "rank-one coupling at site 0"),
             int_key("x_max", "25", 1, 40, "sites covered by the completeness check"),
             real_key("lambda_max", "40", 0.1, 300.0, "upper end of the spectral table"),
             int_key("lambda_points", "200", 2, 100000, "rows of the spectral table"),
         }},
        {"linearize",
         "eigenvalues, real-axis scan and generalized kernel of the linearized operators",
         {
             real_key("mu", std::nullopt, 10.0, 1e4, "soliton parameter"),
             int_key("sigma", "1", 1, 3, "nonlinearity exponent"),
             int_key("scan_points", "2000", 10, 1000000, "uniform points of the real-axis scan"),
             int_key("eigenvector_sites", "40", 1, 2000, "sites written for the H2 eigenvector"),
             int_key("dense_n", "0", 0, 1200, "dense truncation for the eigenvalue oracle (0 skips it)"),
         }},
        {"decay",
         "weighted decay of e^(-itH) P_e for H2 and H with the Duhamel comparison",
         {
             real_key("mu", std::nullopt, 10.0, 1e3, "soliton parameter"),
             int_key("sigma", "1", 1, 3, "nonlinearity exponent"),
             real_key("kappa", "2", 1.0, 100.0, "weight offset"),
             real_key("tau", "-3", -10.0, 0.0, "weight exponent"),
             real_key("t_min", "100", 1e-3, 1e6, "first sample time"),
             real_key("t_max", "10000", 1e-3, 1e7, "last sample time"),
             int_key("samples", "30", 2, 1000, "log-spaced samples"),
             int_key("x_out", "60", 1, 400, "last output site"),
             int_key("site", "0", 0, 400, "initial vector: unit vector of the upper block at this site"),
         }},
        {"evolve",
         "NLS perturbation experiment with modulation tracking",
         {
             real_key("mu", std::nullopt, 10.0, 1e3, "soliton parameter"),
             int_key("sigma", "1", 1, 3, "nonlinearity exponent"),
             real_key("amplitude", "0.01", 0.0, 0.01, "||beta_0||_2 / rho"),
             int_key("site", "0", 0, 100, "site of the initial perturbation before projection"),
             real_key("phase", "0", -10.0, 10.0, "phase of the initial perturbation"),
             real_key("t_end", "100", 0.0, 1e5, "final time"),
             real_key("sample", "0.5", 1e-3, 1e3, "sampling interval"),
             real_key("dt", "0", 0.0, 1.0, "time step (0: 0.01 / mu)"),
             int_key("n_sites", "800", 50, 100000, "lattice size"),
             int_key("sponge_start", "400", 0, 100000, "first absorbing site (0: none)"),
             real_key("sponge_strength", "2", 0.0, 1e3, "peak absorption rate"),
             real_key("kappa", "2", 1.0, 100.0, "weight offset for beta norms"),
             real_key("tau", "-3", -10.0, 0.0, "weight exponent for beta norms"),
         }},
        {"verify",
         "the acceptance suite; nonzero exit when any criterion fails",
         {
             list_key("only", "", 1, 12, "criteria to run (empty: all)"),
         }},
    };
    return all;
}

const CommandSchema& schema_for(const std::string& command)
{
    for (const auto& s : schemas())
        if (s.command == command)
            return s;
    throw ConfigError("unknown command " + command);
}

RunConfig::RunConfig(const CommandSchema& schema, std::map<std::string, std::string> values, std::string source_text)
    : command_(schema.command), values_(std::move(values)), source_(std::move(source_text))
{
}

double RunConfig::real(const std::string& key) const { return *parse_real(values_.at(key)); }

int RunConfig::integer(const std::string& key) const { return static_cast<int>(*parse_integer(values_.at(key))); }

std::vector<int> RunConfig::integers(const std::string& key) const { return *parse_list(values_.at(key)); }

RunConfig load_config(const std::string& command, const std::string& path)
{
    const auto& schema = schema_for(command);
    std::string text;
    pt::ptree tree;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot read config file " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
        try {
            std::istringstream is(text);
            pt::read_ini(is, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(fmt::format("{}: line {}: {}", path, e.line(), e.message()));
        }
    }

    std::vector<std::string> errors;
    std::map<std::string, std::string> values;
    const auto section = tree.get_child_optional(command);
    if (section) {
        for (const auto& [key, node] : *section) {
            const bool known = std::any_of(schema.keys.begin(), schema.keys.end(),
                                           [&](const KeySpec& k) { return k.name == key; });
            if (!known)
                errors.push_back(fmt::format("{}.{} is not a known key", command, key));
        }
    }
    for (const auto& k : schema.keys) {
        std::optional<std::string> raw;
        if (section)
            if (auto v = section->get_optional<std::string>(k.name))
                raw = *v;
        if (!raw)
            raw = k.fallback;
        if (!raw) {
            errors.push_back(fmt::format("{}.{} is required ({})", command, k.name, k.help));
            continue;
        }
        if (auto msg = validate(schema, k, *raw); !msg.empty()) {
            errors.push_back(msg);
            continue;
        }
        values[k.name] = trim(*raw);
    }
    if (command == "decay" && errors.empty() && *parse_real(values["t_min"]) >= *parse_real(values["t_max"]))
        errors.push_back("decay.t_min must be below decay.t_max");
    if (command == "evolve" && errors.empty()) {
        const long n = *parse_integer(values["n_sites"]), s = *parse_integer(values["sponge_start"]);
        if (s != 0 && (s < 60 || s >= n - 10))
            errors.push_back("evolve.sponge_start must be 0 or lie in [60, n_sites - 10)");
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors)
            msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return RunConfig(schema, std::move(values), std::move(text));
}

std::string defaults_help()
{
    std::string out = "Configuration keys (ini section = command):\n";
    for (const auto& s : schemas()) {
        out += fmt::format("  [{}] {}\n", s.command, s.summary);
        for (const auto& k : s.keys)
            out += fmt::format("    {:<18} {:<10} {}\n", k.name, k.fallback ? (k.fallback->empty() ? "(empty)" : *k.fallback) : "required",
                               k.help);
    }
    return out;
}

std::string reference_config()
{
    std::string out;
    for (const auto& s : schemas()) {
        out += fmt::format("; {}\n[{}]\n", s.summary, s.command);
        for (const auto& k : s.keys)
            out += fmt::format("{} = {}\n", k.name, k.fallback ? *k.fallback : std::string("20"));
        out += "\n";
    }
    return out;
}

} // namespace ncsol::cli
