#pragma once

#include "hcodec/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hcodec {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(v); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void i16(std::int16_t v) { put(v); }
    void f32(float v) { put(v); }

    std::vector<std::uint8_t> & buffer() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    template <typename T>
    void put(T v) {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        buf_.insert(buf_.end(), raw, raw + sizeof(T));
    }

    std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader; truncation raises CorruptFile with
// the offset of the failed read.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint64_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::string bytes(std::size_t n) {
        need(n, "bytes");
        std::string s(reinterpret_cast<const char *>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return get<std::uint8_t>("u8"); }
    std::uint16_t u16() { return get<std::uint16_t>("u16"); }
    std::uint32_t u32() { return get<std::uint32_t>("u32"); }
    std::uint64_t u64() { return get<std::uint64_t>("u64"); }
    std::int16_t i16() { return get<std::int16_t>("i16"); }
    float f32() { return get<float>("f32"); }
    void skip(std::size_t n) {
        need(n, "skip");
        pos_ += n;
    }

private:
    void need(std::size_t n, const char * what) const {
        if (remaining() < n) {
            throw Error(Errc::CorruptFile, std::string("truncated while reading ") + what, pos_);
        }
    }

    template <typename T>
    T get(const char * what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path & path);
void write_file_bytes(const std::filesystem::path & path, std::span<const std::uint8_t> bytes);

} // namespace hcodec
