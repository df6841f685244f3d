#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "agc/errors.hpp"

namespace agc {

using Bytes = std::vector<uint8_t>;

// Little-endian serialization helpers used by every on-disk and on-wire format.
class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(uint8_t(v));
        buf_.push_back(uint8_t(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void blob(std::span<const uint8_t> b) {
        u32(static_cast<uint32_t>(b.size()));
        bytes(b);
    }
    void str(const std::string& s) {
        blob({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
    }

    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

  private:
    Bytes buf_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto b = take(2);
        return uint16_t(b[0]) | uint16_t(b[1]) << 8;
    }
    uint32_t u32() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        auto b = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Bytes bytes(size_t n) {
        auto b = take(n);
        return Bytes(b.begin(), b.end());
    }
    Bytes blob() { return bytes(u32()); }
    std::string str() {
        auto b = blob();
        return std::string(b.begin(), b.end());
    }

    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return remaining() == 0; }

  private:
    std::span<const uint8_t> take(size_t n) {
        require(pos_ + n <= data_.size(), Errc::malformed_frame, "truncated data");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

inline std::string to_hex(std::span<const uint8_t> b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (uint8_t c : b) {
        s.push_back(digits[c >> 4]);
        s.push_back(digits[c & 0xf]);
    }
    return s;
}

}  // namespace agc
