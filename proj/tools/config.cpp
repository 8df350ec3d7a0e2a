#include "config.hpp"

#include <fstream>

#include "hsp/errors.hpp"

namespace hsptool {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Settings Settings::load(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open())
        hsp::fail(hsp::errc::io_error, "cannot open config '" + path + "'", {{"path", path}});
    Settings settings;
    std::string line, section;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                hsp::fail(hsp::errc::config_invalid,
                          path + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            hsp::fail(hsp::errc::config_invalid,
                      path + ":" + std::to_string(line_no) + ": expected key = value");
        settings.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return settings;
}

void Settings::set(const std::string& section, const std::string& key, std::string value) {
    sections_[section][key] = std::move(value);
}

bool Settings::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string Settings::str(const std::string& section, const std::string& key,
                          const std::string& fallback) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    const auto kv = it->second.find(key);
    return kv == it->second.end() ? fallback : kv->second;
}

double Settings::num(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(str(section, key));
    } catch (const std::exception&) {
        hsp::fail(hsp::errc::config_invalid,
                  "config value [" + section + "] " + key + " is not a number");
    }
}

long Settings::integer(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stol(str(section, key));
    } catch (const std::exception&) {
        hsp::fail(hsp::errc::config_invalid,
                  "config value [" + section + "] " + key + " is not an integer");
    }
}

bool Settings::flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = str(section, key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    hsp::fail(hsp::errc::config_invalid,
              "config value [" + section + "] " + key + " is not a boolean");
}

std::vector<std::string> Settings::list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    std::string value = str(section, key);
    std::size_t start = 0;
    while (start <= value.size() && !value.empty()) {
        auto comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string item = trim(value.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
        if (comma == value.size()) break;
    }
    return out;
}

}  // namespace hsptool
