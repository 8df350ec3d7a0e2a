#include "output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hsp/errors.hpp"

namespace hsptool {

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary);
        if (!file.is_open())
            hsp::fail(hsp::errc::io_error, "cannot write '" + tmp + "'", {{"path", tmp}});
        file << content;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        hsp::fail(hsp::errc::io_error, "cannot move '" + tmp + "' into place",
                  {{"path", path}, {"reason", ec.message()}});
}

void write_json(const std::string& path, const Json& value) {
    atomic_write(path, value.dump(2) + "\n");
}

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

}  // namespace hsptool
