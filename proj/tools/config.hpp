#pragma once

#include <map>
#include <string>
#include <vector>

namespace hsptool {

/// INI-style settings: [section] headers, key = value lines, '#' or ';'
/// comments. Later assignments win, so command-line overrides are plain
/// set() calls on top of the parsed file.
class Settings {
public:
    static Settings load(const std::string& path);

    void set(const std::string& section, const std::string& key, std::string value);
    bool has(const std::string& section, const std::string& key) const;

    std::string str(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const;
    double num(const std::string& section, const std::string& key, double fallback) const;
    long integer(const std::string& section, const std::string& key, long fallback) const;
    bool flag(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> list(const std::string& section, const std::string& key) const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace hsptool
