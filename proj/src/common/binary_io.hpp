#pragma once

// Little-endian primitive readers/writers shared by the ESG1 and DSW1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "deepsep/errors.hpp"

namespace deepsep::detail {

static_assert(std::endian::native == std::endian::little, "binary codecs assume a little-endian host");

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_bytes(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void put_f32(double v) { put(static_cast<float>(v)); }

    void write_to(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string() + " for writing");
        out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
        if (!out) throw FormatError(FormatErrorKind::Io, "write failed: " + path.string());
    }

private:
    std::vector<char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError(FormatErrorKind::Io, "cannot open " + path_);
        bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(FormatErrorKind::Truncated,
                              path_ + ": truncated while reading " + what);
        }
    }

    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_string(std::size_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    void get_f32_array(std::size_t n, double* dst, const char* what) {
        need(n * sizeof(float), what);
        for (std::size_t i = 0; i < n; ++i) {
            float f;
            std::memcpy(&f, bytes_.data() + pos_ + i * sizeof(float), sizeof(float));
            dst[i] = f;
        }
        pos_ += n * sizeof(float);
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace deepsep::detail
