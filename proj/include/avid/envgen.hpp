#pragma once

// ShapeWorlds: a deterministic, procedurally generated 2D video POMDP.
// Styles 0..14 form the action-free pretraining family; style 15 is the
// held-out adaptation style (the Procgen -> Coinrun analog).
//
// The world is an 8x8 cell grid rendered at cell_px pixels per cell. An
// agent sprite attempts one-cell moves; walls and borders block. Backgrounds
// carry a static procedural texture so the pretrained model has something to
// maintain. Everything is a pure function of (style, seed, actions).

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avid/core.hpp"
#include "avid/rng.hpp"

namespace avid::env {

constexpr int kActionArity = 5;
enum Action : uint8_t { kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };

constexpr int kGrid = 8;
constexpr int kChannels = 3;
constexpr int kNumStyles = 16;
constexpr int kHeldOutStyle = 15;

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    uint8_t chan(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

inline int channel_distance(Rgb a, Rgb b) {
    int d = 0;
    for (int c = 0; c < 3; ++c) {
        d = std::max(d, std::abs(static_cast<int>(a.chan(c)) - static_cast<int>(b.chan(c))));
    }
    return d;
}

enum class Sprite { square, disc, cross, triangle };

struct WorldStyle {
    int style_id = 0;
    Rgb background, wall, agent;
    Sprite sprite = Sprite::square;
    uint64_t texture_seed = 0;
    uint64_t layout_seed = 0;
};

namespace detail {

inline Rgb color_from(uint64_t h) {
    return {static_cast<uint8_t>(h & 0xFF), static_cast<uint8_t>((h >> 8) & 0xFF),
            static_cast<uint8_t>((h >> 16) & 0xFF)};
}

}  // namespace detail

// Deterministic style derivation. The agent color is resampled until it is
// at least 64/255 away (per channel, max norm) from background and walls.
inline WorldStyle make_style(int style_id) {
    require(style_id >= 0 && style_id < kNumStyles,
            "style_id must be in [0, " + std::to_string(kNumStyles) + "), got " +
                std::to_string(style_id));
    uint64_t base = splitmix64(0x5EEDC0DEull + static_cast<uint64_t>(style_id));
    WorldStyle s;
    s.style_id = style_id;
    s.background = detail::color_from(splitmix64(base ^ 0x01));
    Rgb wall = detail::color_from(splitmix64(base ^ 0x02));
    for (uint64_t k = 0; channel_distance(wall, s.background) < 32; ++k) {
        wall = detail::color_from(splitmix64(base ^ (0x100 + k)));
    }
    s.wall = wall;
    Rgb agent = detail::color_from(splitmix64(base ^ 0x03));
    for (uint64_t k = 0;
         channel_distance(agent, s.background) < 64 || channel_distance(agent, s.wall) < 64; ++k) {
        agent = detail::color_from(splitmix64(base ^ (0x10000 + k)));
    }
    s.agent = agent;
    s.sprite = static_cast<Sprite>(splitmix64(base ^ 0x04) % 4);
    s.texture_seed = splitmix64(base ^ 0x05);
    s.layout_seed = splitmix64(base ^ 0x06);
    return s;
}

struct AgentTrace {
    std::vector<std::pair<int, int>> positions;  // (row, col) per frame
};

struct Episode {
    VideoU8 frames;                 // T x H x W x 3
    std::vector<uint8_t> actions;   // length T; actions[T-1] has no successor
    uint16_t style_id = 0;
    uint64_t seed = 0;
};

// Wall layout and start cell for one (style, seed) pair.
struct World {
    WorldStyle style;
    int cell_px = 4;
    std::array<uint8_t, kGrid * kGrid> wall{};
    int start_row = 0, start_col = 0;

    bool is_wall(int r, int c) const { return wall[static_cast<size_t>(r) * kGrid + c] != 0; }
    bool in_grid(int r, int c) const { return r >= 0 && r < kGrid && c >= 0 && c < kGrid; }
    bool blocked(int r, int c) const { return !in_grid(r, c) || is_wall(r, c); }
    int side_px() const { return kGrid * cell_px; }
};

inline std::pair<int, int> action_delta(uint8_t a) {
    switch (a) {
        case kUp: return {-1, 0};
        case kDown: return {1, 0};
        case kLeft: return {0, -1};
        case kRight: return {0, 1};
        default: return {0, 0};
    }
}

inline World build_world(const WorldStyle& style, uint64_t seed, int cell_px) {
    require(cell_px >= 2, "cell_px must be >= 2");
    World w;
    w.style = style;
    w.cell_px = cell_px;

    // layout_seed 0 is the canonical empty arena (useful for physics checks).
    if (style.layout_seed != 0) {
        for (int r = 0; r < kGrid; ++r) {
            for (int c = 0; c < kGrid; ++c) {
                uint64_t h = splitmix64(style.layout_seed ^
                                        (static_cast<uint64_t>(r) * 131 + c + 1));
                w.wall[static_cast<size_t>(r) * kGrid + c] = (h % 100) < 15 ? 1 : 0;
            }
        }
    }

    std::vector<int> free_cells;
    for (int i = 0; i < kGrid * kGrid; ++i) {
        if (!w.wall[static_cast<size_t>(i)]) free_cells.push_back(i);
    }
    require(!free_cells.empty(), "world has no free cells");
    int pick = free_cells[splitmix64(seed ^ 0xA6E17ull) % free_cells.size()];
    w.start_row = pick / kGrid;
    w.start_col = pick % kGrid;
    return w;
}

namespace detail {

inline bool sprite_covers(Sprite s, int y, int x, int n) {
    switch (s) {
        case Sprite::square:
            return true;
        case Sprite::disc: {
            double cc = (n - 1) * 0.5;
            double dy = y - cc, dx = x - cc;
            return dy * dy + dx * dx <= 0.25 * n * n + 1e-9;
        }
        case Sprite::cross: {
            int lo = (n - 1) / 2 - (n > 2 ? 1 : 0), hi = n / 2 + (n > 2 ? 1 : 0);
            return (y >= lo && y <= hi) || (x >= lo && x <= hi);
        }
        case Sprite::triangle:
            return x <= y;
    }
    return true;
}

inline uint8_t textured(uint8_t base, uint64_t texture_seed, int py, int px, int ch) {
    uint64_t h = splitmix64(texture_seed ^ (static_cast<uint64_t>(py) * 7919 +
                                            static_cast<uint64_t>(px) * 104729 + ch));
    int off = static_cast<int>(h % 49) - 24;
    return static_cast<uint8_t>(std::clamp(static_cast<int>(base) + off, 0, 255));
}

inline void render_frame(const World& w, int row, int col, uint8_t* out) {
    const int side = w.side_px();
    const int n = w.cell_px;
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            int r = py / n, c = px / n;
            Rgb color;
            bool texture = false;
            if (w.is_wall(r, c)) {
                color = w.style.wall;
            } else if (r == row && c == col &&
                       sprite_covers(w.style.sprite, py % n, px % n, n)) {
                color = w.style.agent;
            } else {
                color = w.style.background;
                texture = true;
            }
            uint8_t* px_out = out + (static_cast<size_t>(py) * side + px) * kChannels;
            for (int ch = 0; ch < kChannels; ++ch) {
                px_out[ch] = texture ? textured(color.chan(ch), w.style.texture_seed, py, px, ch)
                                     : color.chan(ch);
            }
        }
    }
}

}  // namespace detail

// Re-renderable physics: positions follow the attempted moves, blocked moves
// leave the position unchanged, frames render positions per step.
inline std::pair<Episode, AgentTrace> rollout(const WorldStyle& style, uint64_t seed,
                                              const std::vector<uint8_t>& actions, int cell_px) {
    const int frames = static_cast<int>(actions.size());
    require(frames >= 2, "rollout needs T >= 2 frames");
    for (uint8_t a : actions) {
        require(a < kActionArity, "action id out of range");
    }
    World w = build_world(style, seed, cell_px);

    AgentTrace trace;
    trace.positions.resize(static_cast<size_t>(frames));
    trace.positions[0] = {w.start_row, w.start_col};
    for (int tau = 0; tau + 1 < frames; ++tau) {
        auto [r, c] = trace.positions[static_cast<size_t>(tau)];
        auto [dr, dc] = action_delta(actions[static_cast<size_t>(tau)]);
        int nr = r + dr, nc = c + dc;
        trace.positions[static_cast<size_t>(tau + 1)] = w.blocked(nr, nc)
                                                            ? std::make_pair(r, c)
                                                            : std::make_pair(nr, nc);
    }

    Episode ep;
    ep.style_id = static_cast<uint16_t>(style.style_id);
    ep.seed = seed;
    ep.actions = actions;
    ep.frames = VideoU8(frames, w.side_px(), w.side_px(), kChannels);
    for (int tau = 0; tau < frames; ++tau) {
        auto [r, c] = trace.positions[static_cast<size_t>(tau)];
        detail::render_frame(w, r, c, ep.frames.v.data() + ep.frames.idx(tau, 0, 0, 0));
    }
    return {std::move(ep), std::move(trace)};
}

enum class Policy { uniform_random, scripted };

inline std::pair<Episode, AgentTrace> generate_episode(const WorldStyle& style, uint64_t seed,
                                                       int frames, Policy policy, int cell_px) {
    require(frames >= 2, "generate_episode needs T >= 2");
    World w = build_world(style, seed, cell_px);

    std::vector<uint8_t> actions(static_cast<size_t>(frames));
    if (policy == Policy::uniform_random) {
        // Sampled among feasible moves (plus stay) so every labelled action is
        // visually identifiable; blocked attempts would alias with 'stay'.
        Rng64 rng(splitmix64(seed ^ 0xAC7105ull));
        int r = w.start_row, c = w.start_col;
        for (int tau = 0; tau < frames; ++tau) {
            std::vector<uint8_t> feasible = {kStay};
            for (uint8_t a = 1; a < kActionArity; ++a) {
                auto [dr, dc] = action_delta(a);
                if (!w.blocked(r + dr, c + dc)) feasible.push_back(a);
            }
            uint8_t a = feasible[rng.below(feasible.size())];
            actions[static_cast<size_t>(tau)] = a;
            if (tau + 1 < frames) {
                auto [dr, dc] = action_delta(a);
                if (!w.blocked(r + dr, c + dc)) {
                    r += dr;
                    c += dc;
                }
            }
        }
    } else {
        uint8_t phase = static_cast<uint8_t>(splitmix64(seed) % 4);
        for (int tau = 0; tau < frames; ++tau) {
            actions[static_cast<size_t>(tau)] = static_cast<uint8_t>(1 + (phase + tau) % 4);
        }
    }
    return rollout(style, seed, actions, cell_px);
}

// ---------------------------------------------------------------------------
// AVD1 dataset container (little-endian):
//   magic "AVD1", u16 version=1, u16 T, u16 H, u16 W, u16 C, u8 action_kind,
//   u16 action_arity, u32 episode_count, u64 corpus_seed,
//   per episode: u16 style_id, u64 seed, T*H*W*C frame bytes, T action bytes,
//   trailing u32 CRC32 over all episode bytes.
// ---------------------------------------------------------------------------

struct DatasetHeader {
    uint16_t version = 1;
    uint16_t t = 0, h = 0, w = 0, c = 0;
    uint8_t action_kind = 0;  // 0 = discrete
    uint16_t action_arity = kActionArity;
    uint32_t episode_count = 0;
    uint64_t corpus_seed = 0;

    size_t episode_bytes() const {
        return 2 + 8 + static_cast<size_t>(t) * h * w * c + t;
    }
};

namespace detail {

constexpr char kMagic[4] = {'A', 'V', 'D', '1'};
constexpr size_t kHeaderBytes = 4 + 2 + 2 + 2 + 2 + 2 + 1 + 2 + 4 + 8;

template <class T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));  // little-endian hosts only
}

template <class T>
T get(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace detail

inline std::string serialize_header(const DatasetHeader& h) {
    std::string buf;
    buf.append(detail::kMagic, 4);
    detail::put(buf, h.version);
    detail::put(buf, h.t);
    detail::put(buf, h.h);
    detail::put(buf, h.w);
    detail::put(buf, h.c);
    detail::put(buf, h.action_kind);
    detail::put(buf, h.action_arity);
    detail::put(buf, h.episode_count);
    detail::put(buf, h.corpus_seed);
    return buf;
}

class DatasetWriter {
public:
    DatasetWriter(const std::string& path, DatasetHeader header)
        : path_(path), header_(header), out_(path, std::ios::binary) {
        require(static_cast<bool>(out_), "cannot open dataset file for writing: " + path);
        std::string h = serialize_header(header_);
        out_.write(h.data(), static_cast<std::streamsize>(h.size()));
        written_ = 0;
    }

    void add(const Episode& ep) {
        require(ep.frames.t == header_.t && ep.frames.h == header_.h &&
                    ep.frames.w == header_.w && ep.frames.c == header_.c,
                "episode shape does not match dataset header");
        require(ep.actions.size() == static_cast<size_t>(header_.t),
                "episode action count does not match header T");
        std::string buf;
        detail::put(buf, ep.style_id);
        detail::put(buf, ep.seed);
        buf.append(reinterpret_cast<const char*>(ep.frames.v.data()), ep.frames.v.size());
        buf.append(reinterpret_cast<const char*>(ep.actions.data()), ep.actions.size());
        crc_.update(buf.data(), buf.size());
        out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        ++written_;
    }

    void finish() {
        require(written_ == header_.episode_count,
                "dataset writer: wrote " + std::to_string(written_) + " episodes, header says " +
                    std::to_string(header_.episode_count));
        uint32_t crc = crc_.value();
        out_.write(reinterpret_cast<const char*>(&crc), 4);
        out_.close();
        require(static_cast<bool>(out_), "dataset write failed: " + path_);
    }

private:
    std::string path_;
    DatasetHeader header_;
    std::ofstream out_;
    Crc32 crc_;
    uint32_t written_ = 0;
};

class DatasetReader {
public:
    explicit DatasetReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        require(static_cast<bool>(in_), "cannot open dataset file: " + path);
        char buf[detail::kHeaderBytes];
        in_.read(buf, detail::kHeaderBytes);
        require(in_.gcount() == static_cast<std::streamsize>(detail::kHeaderBytes),
                path + ": truncated header at byte offset " + std::to_string(in_.gcount()));
        require(std::memcmp(buf, detail::kMagic, 4) == 0, path + ": bad magic at byte offset 0");
        const char* p = buf + 4;
        header_.version = detail::get<uint16_t>(p);
        p += 2;
        require(header_.version == 1,
                path + ": unsupported version " + std::to_string(header_.version));
        header_.t = detail::get<uint16_t>(p); p += 2;
        header_.h = detail::get<uint16_t>(p); p += 2;
        header_.w = detail::get<uint16_t>(p); p += 2;
        header_.c = detail::get<uint16_t>(p); p += 2;
        header_.action_kind = detail::get<uint8_t>(p); p += 1;
        header_.action_arity = detail::get<uint16_t>(p); p += 2;
        header_.episode_count = detail::get<uint32_t>(p); p += 4;
        header_.corpus_seed = detail::get<uint64_t>(p);
    }

    const DatasetHeader& header() const { return header_; }

    // Reads episode k (0-based). Also feeds the running CRC when iterating
    // sequentially via read_all / for_each.
    Episode read_episode(uint32_t k) {
        require(k < header_.episode_count, "episode index out of range");
        size_t off = detail::kHeaderBytes + static_cast<size_t>(k) * header_.episode_bytes();
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(off));
        std::string buf(header_.episode_bytes(), '\0');
        in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        require(in_.gcount() == static_cast<std::streamsize>(buf.size()),
                path_ + ": truncated payload in episode " + std::to_string(k) +
                    " at byte offset " + std::to_string(off + static_cast<size_t>(in_.gcount())));
        Episode ep;
        ep.style_id = detail::get<uint16_t>(buf.data());
        ep.seed = detail::get<uint64_t>(buf.data() + 2);
        ep.frames = VideoU8(header_.t, header_.h, header_.w, header_.c);
        std::memcpy(ep.frames.v.data(), buf.data() + 10, ep.frames.v.size());
        ep.actions.resize(header_.t);
        std::memcpy(ep.actions.data(), buf.data() + 10 + ep.frames.v.size(), header_.t);
        return ep;
    }

    template <class Fn>
    void for_each(Fn fn) {
        Crc32 crc;
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(detail::kHeaderBytes));
        std::string buf(header_.episode_bytes(), '\0');
        for (uint32_t k = 0; k < header_.episode_count; ++k) {
            size_t off = detail::kHeaderBytes + static_cast<size_t>(k) * header_.episode_bytes();
            in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            require(in_.gcount() == static_cast<std::streamsize>(buf.size()),
                    path_ + ": truncated payload in episode " + std::to_string(k) +
                        " at byte offset " +
                        std::to_string(off + static_cast<size_t>(in_.gcount())));
            crc.update(buf.data(), buf.size());
            Episode ep;
            ep.style_id = detail::get<uint16_t>(buf.data());
            ep.seed = detail::get<uint64_t>(buf.data() + 2);
            ep.frames = VideoU8(header_.t, header_.h, header_.w, header_.c);
            std::memcpy(ep.frames.v.data(), buf.data() + 10, ep.frames.v.size());
            ep.actions.resize(header_.t);
            std::memcpy(ep.actions.data(), buf.data() + 10 + ep.frames.v.size(), header_.t);
            fn(k, ep);
        }
        uint32_t stored = 0;
        size_t crc_off = detail::kHeaderBytes +
                         static_cast<size_t>(header_.episode_count) * header_.episode_bytes();
        in_.read(reinterpret_cast<char*>(&stored), 4);
        require(in_.gcount() == 4,
                path_ + ": truncated checksum at byte offset " + std::to_string(crc_off));
        require(stored == crc.value(), path_ + ": checksum mismatch at byte offset " +
                                           std::to_string(crc_off) + " (stored " +
                                           std::to_string(stored) + ", computed " +
                                           std::to_string(crc.value()) + ")");
    }

    std::vector<Episode> read_all() {
        std::vector<Episode> eps;
        eps.reserve(header_.episode_count);
        for_each([&](uint32_t, Episode ep) { eps.push_back(std::move(ep)); });
        return eps;
    }

    std::set<int> styles_present() {
        std::set<int> styles;
        for_each([&](uint32_t, const Episode& ep) { styles.insert(ep.style_id); });
        return styles;
    }

private:
    std::string path_;
    std::ifstream in_;
    DatasetHeader header_;
};

struct CorpusSpec {
    std::set<int> styles;
    int episodes_per_style = 0;
    int frames = 8;
    int cell_px = 4;
    uint64_t seed = 0;
    Policy policy = Policy::uniform_random;
};

inline void build_corpus(const CorpusSpec& spec, const std::string& path) {
    require(!spec.styles.empty(), "build_corpus: styles set is empty");
    require(spec.episodes_per_style > 0, "build_corpus: episodes_per_style must be positive");

    DatasetHeader header;
    header.t = static_cast<uint16_t>(spec.frames);
    header.h = header.w = static_cast<uint16_t>(kGrid * spec.cell_px);
    header.c = kChannels;
    header.action_arity = kActionArity;
    header.episode_count =
        static_cast<uint32_t>(spec.styles.size() * static_cast<size_t>(spec.episodes_per_style));
    header.corpus_seed = spec.seed;

    DatasetWriter writer(path, header);
    for (int style_id : spec.styles) {
        WorldStyle style = make_style(style_id);
        for (int e = 0; e < spec.episodes_per_style; ++e) {
            uint64_t ep_seed = splitmix64(spec.seed ^ (static_cast<uint64_t>(style_id) << 32) ^
                                          static_cast<uint64_t>(e) * 0x9E3779B9ull);
            auto [ep, trace] = generate_episode(style, ep_seed, spec.frames, spec.policy,
                                                spec.cell_px);
            writer.add(ep);
        }
    }
    writer.finish();
}

// Pretraining corpora must never contain the held-out style.
inline void audit_style_holdout(const std::string& path) {
    DatasetReader reader(path);
    reader.for_each([&](uint32_t k, const Episode& ep) {
        require(ep.style_id != kHeldOutStyle,
                path + ": episode " + std::to_string(k) + " carries held-out style " +
                    std::to_string(kHeldOutStyle));
    });
}

}  // namespace avid::env
