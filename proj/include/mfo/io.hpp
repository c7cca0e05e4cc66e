#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mfo {

// Log level from MFO_LOG_LEVEL (error | info | debug); defaults to info.
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("MFO_LOG_LEVEL");
        if (env == nullptr) return 1;
        const std::string v(env);
        if (v == "error") return 0;
        if (v == "info") return 1;
        if (v == "debug") return 2;
        return 1;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

inline void log_error(const std::string& msg) {
    std::fprintf(stderr, "[error] %s\n", msg.c_str());
}

inline void ensure_dir(const std::string& path) {
    std::filesystem::create_directories(path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write-to-temp plus atomic rename; no partial files on failure.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
        if (!out.good()) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace mfo
