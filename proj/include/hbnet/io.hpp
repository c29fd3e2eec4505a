#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hbnet/common.hpp"

namespace hbnet::io {

// All on-disk integers and reals are little-endian.

inline void put_bytes(std::string& out, const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<u64>(value) >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double value) {
    u64 bits = std::bit_cast<u64>(value);
    put_le<u64>(out, bits);
}

class Reader {
  public:
    Reader(const u8* data, size_t size) : data_(data), size_(size) {}
    explicit Reader(const std::string& bytes)
        : data_(reinterpret_cast<const u8*>(bytes.data())), size_(bytes.size()) {}

    template <typename T>
    T get_le() {
        static_assert(std::is_integral_v<T>);
        need(sizeof(T));
        u64 v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<u64>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    double get_f64() { return std::bit_cast<double>(get_le<u64>()); }

    void get_bytes(void* out, size_t n) {
        need(n);
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }

    std::string get_string(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    size_t remaining() const { return size_ - pos_; }
    bool at_end() const { return pos_ == size_; }

  private:
    void need(size_t n) const {
        if (pos_ + n > size_) fail("truncated input: needed " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    }

    const u8* data_;
    size_t size_;
    size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) fail("read failed: " + path);
    return bytes;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open file for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) fail("write failed: " + path);
}

}  // namespace hbnet::io
