#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfo {

// Little-endian binary writer for checkpoint payloads.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }

    // Doubles are stored as their IEEE-754 bit pattern, so round-trips are exact.
    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

    void put_f64_vec(const std::vector<double>& v) {
        put_u64(v.size());
        for (double x : v) put_f64(x);
    }

    void put_string(const std::string& s) {
        put_u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    std::vector<std::uint8_t> take() { return std::move(buf_); }
    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; any overrun means a corrupt or truncated blob.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }

    double get_f64() { return std::bit_cast<double>(get_u64()); }

    std::vector<double> get_f64_vec() {
        const std::uint64_t n = get_u64();
        if (n > remaining() / 8) {
            throw std::runtime_error("corrupt blob: vector length exceeds payload");
        }
        std::vector<double> v(n);
        for (std::uint64_t i = 0; i < n; ++i) v[i] = get_f64();
        return v;
    }

    std::string get_string() {
        const std::uint64_t n = get_u64();
        if (n > remaining()) {
            throw std::runtime_error("corrupt blob: string length exceeds payload");
        }
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool exhausted() const { return pos_ == data_.size(); }

    void expect_exhausted() const {
        if (!exhausted()) {
            throw std::runtime_error("corrupt blob: trailing bytes after payload");
        }
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) {
            throw std::runtime_error("corrupt blob: truncated");
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace mfo
