#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bgc {

// Flat key-value configuration. File format: one `key = value` per line,
// `#` starts a comment, blank lines ignored. Keys are dotted
// (e.g. steering.radius_deg). Later assignments win, which is also how
// flag overrides are layered on top of a file.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    int get_int(const std::string& key, int dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    // Comma-separated list of reals, e.g. "3.0,1.5,0.75".
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& dflt) const;
    std::vector<std::string> get_strs(const std::string& key,
                                      const std::vector<std::string>& dflt) const;

    // Canonical "key = value" lines, sorted by key.
    std::string canonical_text() const;
    // FNV-1a of canonical_text(), as 16 hex digits.
    std::string hash_hex() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace bgc
