#pragma once

#include "aebsurro/errors.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace aebsurro::io {

namespace fs = std::filesystem;

// Writes through a sibling temp file and renames, so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::io, "cannot create directory " + path.parent_path().string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::io, "cannot rename " + tmp.string() + " to " + path.string());
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::missing_prerequisite, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

// At most `digits` significant digits; used for derived quantities such as
// times on the step grid where round-trip text would expose rounding noise.
inline std::string format_general(double x, int digits) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
    return std::string(buf, r.ptr);
}

// Little-endian binary archive used for fitted-model artifacts.
class BinaryWriter {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        data_.append(buf, sizeof(T));
    }

    void put_string(std::string_view s) {
        put<std::uint64_t>(s.size());
        data_.append(s.data(), s.size());
    }

    template <typename T>
    void put_vector(const std::vector<T>& v) {
        put<std::uint64_t>(v.size());
        for (const auto& x : v) put<T>(x);
    }

    void put_doubles(const double* p, std::size_t n) {
        put<std::uint64_t>(n);
        data_.append(reinterpret_cast<const char*>(p), n * sizeof(double));
    }

    const std::string& bytes() const { return data_; }

private:
    std::string data_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string data) : data_(std::move(data)) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    std::vector<T> get_vector() {
        const auto n = get<std::uint64_t>();
        need(n * sizeof(T));
        std::vector<T> v(n);
        for (auto& x : v) x = get<T>();
        return v;
    }

    std::vector<double> get_doubles() {
        const auto n = get<std::uint64_t>();
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) fail(ErrorKind::parse, "truncated model artifact");
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace aebsurro::io
