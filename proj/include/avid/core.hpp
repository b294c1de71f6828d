#pragma once

// Core value types shared by every module: the video tensor, 8-bit frame
// quantization, error reporting, and a CRC32 for container checksums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace avid {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) {
    throw Error(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) {
        fail(msg);
    }
}

// T x H x W x C, row-major, values nominally in [-1, 1] for pixel data.
// Also used for scalar lab quantities (all dims 1) and feature stacks.
template <class S>
struct BasicVideo {
    int t = 0, h = 0, w = 0, c = 0;
    std::vector<S> v;

    BasicVideo() = default;
    BasicVideo(int t_, int h_, int w_, int c_, S fill = S(0))
        : t(t_), h(h_), w(w_), c(c_), v(static_cast<size_t>(t_) * h_ * w_ * c_, fill) {}

    size_t size() const { return v.size(); }
    bool same_shape(const BasicVideo& o) const {
        return t == o.t && h == o.h && w == o.w && c == o.c;
    }
    std::string shape_str() const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%dx%dx%dx%d", t, h, w, c);
        return buf;
    }

    size_t idx(int ti, int hi, int wi, int ci) const {
        return ((static_cast<size_t>(ti) * h + hi) * w + wi) * c + ci;
    }
    S& at(int ti, int hi, int wi, int ci) { return v[idx(ti, hi, wi, ci)]; }
    S at(int ti, int hi, int wi, int ci) const { return v[idx(ti, hi, wi, ci)]; }

    S* frame(int ti) { return v.data() + static_cast<size_t>(ti) * h * w * c; }
    const S* frame(int ti) const { return v.data() + static_cast<size_t>(ti) * h * w * c; }

    bool finite() const {
        for (S x : v) {
            if (!std::isfinite(static_cast<double>(x))) {
                return false;
            }
        }
        return true;
    }
};

using VideoTensor = BasicVideo<float>;
using VideoTensorD = BasicVideo<double>;

struct VideoU8 {
    int t = 0, h = 0, w = 0, c = 0;
    std::vector<uint8_t> v;

    VideoU8() = default;
    VideoU8(int t_, int h_, int w_, int c_, uint8_t fill = 0)
        : t(t_), h(h_), w(w_), c(c_), v(static_cast<size_t>(t_) * h_ * w_ * c_, fill) {}

    size_t size() const { return v.size(); }
    bool same_shape(const VideoU8& o) const {
        return t == o.t && h == o.h && w == o.w && c == o.c;
    }
    size_t idx(int ti, int hi, int wi, int ci) const {
        return ((static_cast<size_t>(ti) * h + hi) * w + wi) * c + ci;
    }
    uint8_t& at(int ti, int hi, int wi, int ci) { return v[idx(ti, hi, wi, ci)]; }
    uint8_t at(int ti, int hi, int wi, int ci) const { return v[idx(ti, hi, wi, ci)]; }
};

// Fixed quantization map: u in [0,255] <-> x = u/127.5 - 1 in [-1,1].
inline float u8_to_unit(uint8_t u) {
    return static_cast<float>(u) / 127.5f - 1.0f;
}

inline uint8_t unit_to_u8(float x) {
    float s = (x + 1.0f) * 127.5f;
    long r = std::lround(s);
    return static_cast<uint8_t>(std::clamp(r, 0L, 255L));
}

inline VideoTensor to_unit(const VideoU8& u) {
    VideoTensor out(u.t, u.h, u.w, u.c);
    for (size_t i = 0; i < u.v.size(); ++i) {
        out.v[i] = u8_to_unit(u.v[i]);
    }
    return out;
}

inline VideoU8 to_u8(const VideoTensor& x) {
    VideoU8 out(x.t, x.h, x.w, x.c);
    for (size_t i = 0; i < x.v.size(); ++i) {
        out.v[i] = unit_to_u8(x.v[i]);
    }
    return out;
}

// CRC32 (IEEE 802.3, reflected polynomial 0xEDB88320), incremental.
class Crc32 {
public:
    Crc32() { reset(); }
    void reset() { state_ = 0xFFFFFFFFu; }

    void update(const void* data, size_t n) {
        const uint8_t* p = static_cast<const uint8_t*>(data);
        uint32_t s = state_;
        for (size_t i = 0; i < n; ++i) {
            s = table()[(s ^ p[i]) & 0xFF] ^ (s >> 8);
        }
        state_ = s;
    }

    uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

private:
    static const uint32_t* table() {
        static const std::vector<uint32_t> t = [] {
            std::vector<uint32_t> v(256);
            for (uint32_t i = 0; i < 256; ++i) {
                uint32_t x = i;
                for (int k = 0; k < 8; ++k) {
                    x = (x & 1) ? (0xEDB88320u ^ (x >> 1)) : (x >> 1);
                }
                v[i] = x;
            }
            return v;
        }();
        return t.data();
    }

    uint32_t state_ = 0xFFFFFFFFu;
};

inline uint32_t crc32_of(const void* data, size_t n) {
    Crc32 c;
    c.update(data, n);
    return c.value();
}

}  // namespace avid
