#pragma once

#include <bit>
#include <cstdint>
#include <string>

namespace bgc::binio {

inline void put_u8(std::string& buf, std::uint8_t v) {
    buf.push_back(static_cast<char>(v));
}

inline void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k)
        buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
    for (int k = 0; k < 8; ++k)
        buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_i64(std::string& buf, std::int64_t v) {
    put_u64(buf, static_cast<std::uint64_t>(v));
}

inline void put_f32(std::string& buf, float v) {
    put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::string& buf, double v) {
    put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

// Sequential little-endian reader over an in-memory byte buffer.  Reads past
// the end throw TruncatedPayload naming the offset where data ran out.
class Reader {
public:
    Reader(const std::string& buf, std::string context)
        : buf_(buf), context_(std::move(context)) {}

    std::size_t offset() const { return off_; }
    std::size_t size() const { return buf_.size(); }
    std::size_t remaining() const { return buf_.size() - off_; }

    std::uint8_t get_u8(const char* what);
    std::uint16_t get_u16(const char* what);
    std::uint32_t get_u32(const char* what);
    std::uint64_t get_u64(const char* what);
    std::int64_t get_i64(const char* what);
    float get_f32(const char* what);
    double get_f64(const char* what);
    std::string get_bytes(std::size_t n, const char* what);
    void skip(std::size_t n, const char* what);

private:
    void need(std::size_t n, const char* what) const;

    const std::string& buf_;
    std::string context_;
    std::size_t off_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace bgc::binio
