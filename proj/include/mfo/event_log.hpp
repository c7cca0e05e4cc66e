#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "json.hpp"

namespace mfo {

using json = nlohmann::json;

inline std::uint32_t crc32_of(const std::string& payload) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                static_cast<uInt>(payload.size())));
}

inline std::string crc32_hex(std::uint32_t crc) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int i = 7; i >= 0; --i) {
        out[i] = digits[crc & 0xF];
        crc >>= 4;
    }
    return out;
}

// Append-only JSONL event log. Each line is {"crc32": <hex>, "e": <event>}
// with the checksum taken over the canonical dump of the event object, so
// any tampering or truncation is detectable on replay.
class EventWriter {
public:
    explicit EventWriter(const std::string& path)
        : out_(path, std::ios::binary | std::ios::app) {
        if (!out_) throw std::runtime_error("cannot open event log: " + path);
    }

    void append(const json& event) {
        const std::string payload = event.dump();
        json line;
        line["crc32"] = crc32_hex(crc32_of(payload));
        line["e"] = event;
        out_ << line.dump() << '\n';
        out_.flush();
        if (!out_.good()) throw std::runtime_error("event log write failed");
    }

private:
    std::ofstream out_;
};

// Reads and integrity-checks a full event log. Any malformed line or
// checksum mismatch is an error; resuming from a corrupt log is refused.
inline std::vector<json> read_events(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open event log: " + path);
    std::vector<json> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        json parsed;
        try {
            parsed = json::parse(line);
        } catch (const json::exception&) {
            throw std::runtime_error("event log line " + std::to_string(lineno) +
                                     ": malformed JSON");
        }
        if (!parsed.contains("crc32") || !parsed.contains("e")) {
            throw std::runtime_error("event log line " + std::to_string(lineno) +
                                     ": missing checksum or event");
        }
        const std::string payload = parsed["e"].dump();
        if (crc32_hex(crc32_of(payload)) != parsed["crc32"].get<std::string>()) {
            throw std::runtime_error("event log line " + std::to_string(lineno) +
                                     ": checksum mismatch");
        }
        events.push_back(parsed["e"]);
    }
    return events;
}

}  // namespace mfo
