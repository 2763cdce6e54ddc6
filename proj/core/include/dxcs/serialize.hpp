#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "dxcs/errors.hpp"

namespace dxcs {

// Little-endian binary stream helpers used by network and checkpoint files.

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& os) : os_(os) {}

    void u8(uint8_t v) { raw(&v, 1); }
    void u32(uint32_t v) { raw(&v, sizeof v); }
    void u64(uint64_t v) { raw(&v, sizeof v); }
    void i32(int32_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void f64_vec(const std::vector<double>& v) {
        u64(v.size());
        if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
    }
    void u8_vec(const std::vector<uint8_t>& v) {
        u64(v.size());
        if (!v.empty()) raw(v.data(), v.size());
    }

private:
    void raw(const void* p, size_t n) {
        os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    std::ostream& os_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& is) : is_(is) {}

    uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
    uint32_t u32() { uint32_t v; raw(&v, sizeof v); return v; }
    uint64_t u64() { uint64_t v; raw(&v, sizeof v); return v; }
    int32_t i32() { int32_t v; raw(&v, sizeof v); return v; }
    double f64() { double v; raw(&v, sizeof v); return v; }

    std::vector<double> f64_vec(uint64_t max_len = UINT64_C(1) << 32) {
        const uint64_t n = len(max_len);
        std::vector<double> v(n);
        if (n) raw(v.data(), n * sizeof(double));
        return v;
    }
    std::vector<uint8_t> u8_vec(uint64_t max_len = UINT64_C(1) << 32) {
        const uint64_t n = len(max_len);
        std::vector<uint8_t> v(n);
        if (n) raw(v.data(), n);
        return v;
    }

private:
    uint64_t len(uint64_t max_len) {
        const uint64_t n = u64();
        if (n > max_len) throw FormatError("implausible array length in stream");
        return n;
    }
    void raw(void* p, size_t n) {
        is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!is_) throw FormatError("truncated stream");
    }
    std::istream& is_;
};

} // namespace dxcs
