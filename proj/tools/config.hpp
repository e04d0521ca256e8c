#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncsol::cli {

enum class KeyKind { real, integer, integer_list };

struct KeySpec {
    std::string name;
    KeyKind kind = KeyKind::real;
    std::optional<std::string> fallback;   // no fallback means required
    double min = 0.0;
    double max = 0.0;
    std::string help;
};

// Keys of one subcommand; read from the ini section of the same name.
struct CommandSchema {
    std::string command;
    std::string summary;
    std::vector<KeySpec> keys;
};

const std::vector<CommandSchema>& schemas();
const CommandSchema& schema_for(const std::string& command);

// Validated values of one section.
class RunConfig {
public:
    RunConfig(const CommandSchema& schema, std::map<std::string, std::string> values, std::string source_text);

    double real(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<int> integers(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::string& source_text() const { return source_; }
    const std::string& command() const { return command_; }

private:
    std::string command_;
    std::map<std::string, std::string> values_;
    std::string source_;
};

// Reads the ini file (empty path: no file, defaults only), validates the
// section of `command` and throws ConfigError listing every offending key.
RunConfig load_config(const std::string& command, const std::string& path);

// Defaults table for --help.
std::string defaults_help();

// Reference ini text with every key at its default (required keys filled with an example).
std::string reference_config();

} // namespace ncsol::cli
