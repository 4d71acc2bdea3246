#include "bgc/binio.hpp"

#include <fstream>
#include <sstream>

#include "bgc/errors.hpp"

namespace bgc::binio {

void Reader::need(std::size_t n, const char* what) const {
    if (off_ + n > buf_.size()) {
        throw TruncatedPayload(context_ + ": truncated at offset " +
                               std::to_string(buf_.size()) + " while reading " +
                               what + " (need " + std::to_string(off_ + n) +
                               " bytes)");
    }
}

std::uint8_t Reader::get_u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[off_++]);
}

std::uint16_t Reader::get_u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int k = 0; k < 2; ++k)
        v |= static_cast<std::uint16_t>(
            static_cast<std::uint8_t>(buf_[off_ + k]) << (8 * k));
    off_ += 2;
    return v;
}

std::uint32_t Reader::get_u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
        v |= static_cast<std::uint32_t>(
                 static_cast<std::uint8_t>(buf_[off_ + k]))
             << (8 * k);
    off_ += 4;
    return v;
}

std::uint64_t Reader::get_u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
        v |= static_cast<std::uint64_t>(
                 static_cast<std::uint8_t>(buf_[off_ + k]))
             << (8 * k);
    off_ += 8;
    return v;
}

std::int64_t Reader::get_i64(const char* what) {
    return static_cast<std::int64_t>(get_u64(what));
}

float Reader::get_f32(const char* what) {
    return std::bit_cast<float>(get_u32(what));
}

double Reader::get_f64(const char* what) {
    return std::bit_cast<double>(get_u64(what));
}

std::string Reader::get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string out = buf_.substr(off_, n);
    off_ += n;
    return out;
}

void Reader::skip(std::size_t n, const char* what) {
    need(n, what);
    off_ += n;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open file '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("short write to '" + path + "'");
}

}  // namespace bgc::binio
