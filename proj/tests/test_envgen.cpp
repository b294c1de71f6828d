#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "avid/envgen.hpp"

using namespace avid;
using namespace avid::env;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("make_style: palette constraints hold for all styles") {
    for (int id = 0; id < kNumStyles; ++id) {
        WorldStyle s = make_style(id);
        REQUIRE(s.style_id == id);
        REQUIRE(channel_distance(s.agent, s.background) >= 64);
        REQUIRE(channel_distance(s.agent, s.wall) >= 64);
    }
    REQUIRE_THROWS_AS(make_style(16), Error);
    REQUIRE_THROWS_AS(make_style(-1), Error);
}

TEST_CASE("rollout: all-stay actions give identical frames") {
    WorldStyle style = make_style(3);
    std::vector<uint8_t> actions(6, kStay);
    auto [ep, trace] = rollout(style, 42, actions, 4);
    REQUIRE(ep.frames.t == 6);
    for (int tau = 1; tau < 6; ++tau) {
        for (int hi = 0; hi < ep.frames.h; ++hi)
            for (int wi = 0; wi < ep.frames.w; ++wi)
                for (int ci = 0; ci < 3; ++ci)
                    REQUIRE(ep.frames.at(tau, hi, wi, ci) == ep.frames.at(0, hi, wi, ci));
        REQUIRE(trace.positions[static_cast<size_t>(tau)] == trace.positions[0]);
    }
}

TEST_CASE("rollout: right in an empty arena advances one cell until the border") {
    WorldStyle style = make_style(0);
    style.layout_seed = 0;  // canonical empty arena
    const int frames = 12;
    std::vector<uint8_t> actions(frames, kRight);
    auto [ep, trace] = rollout(style, 7, actions, 4);
    for (int tau = 0; tau + 1 < frames; ++tau) {
        auto [r0, c0] = trace.positions[static_cast<size_t>(tau)];
        auto [r1, c1] = trace.positions[static_cast<size_t>(tau + 1)];
        REQUIRE(r1 == r0);
        REQUIRE(c1 == (c0 < kGrid - 1 ? c0 + 1 : c0));
    }
    REQUIRE(trace.positions.back().second == kGrid - 1);
}

TEST_CASE("rollout: deterministic and regenerable from (style, seed, actions)") {
    WorldStyle style = make_style(9);
    std::vector<uint8_t> actions = {kRight, kDown, kStay, kLeft, kUp, kRight, kDown, kStay};
    auto [a, ta] = rollout(style, 1234, actions, 4);
    auto [b, tb] = rollout(style, 1234, actions, 4);
    REQUIRE(a.frames.v == b.frames.v);
    REQUIRE(ta.positions == tb.positions);

    auto [c, tc] = rollout(style, 1235, actions, 4);
    REQUIRE(a.frames.v != c.frames.v);
}

TEST_CASE("generate_episode: uniform_random actions are never blocked") {
    for (int id : {1, 5, 15}) {
        WorldStyle style = make_style(id);
        auto [ep, trace] = generate_episode(style, 77, 16, Policy::uniform_random, 2);
        World w = build_world(style, 77, 2);
        for (size_t tau = 0; tau + 1 < trace.positions.size(); ++tau) {
            uint8_t a = ep.actions[tau];
            auto [r, c] = trace.positions[tau];
            auto [dr, dc] = action_delta(a);
            if (a != kStay) {
                REQUIRE_FALSE(w.blocked(r + dr, c + dc));
                REQUIRE(trace.positions[tau + 1] == std::make_pair(r + dr, c + dc));
            } else {
                REQUIRE(trace.positions[tau + 1] == std::make_pair(r, c));
            }
        }
    }
}

TEST_CASE("physics: trace stays on free cells with unit moves") {
    WorldStyle style = make_style(11);
    auto [ep, trace] = generate_episode(style, 5, 32, Policy::uniform_random, 2);
    World w = build_world(style, 5, 2);
    for (size_t tau = 0; tau < trace.positions.size(); ++tau) {
        auto [r, c] = trace.positions[tau];
        REQUIRE(w.in_grid(r, c));
        REQUIRE_FALSE(w.is_wall(r, c));
        if (tau > 0) {
            auto [pr, pc] = trace.positions[tau - 1];
            REQUIRE(std::abs(r - pr) + std::abs(c - pc) <= 1);
        }
    }
}

TEST_CASE("action identifiability: distinct non-blocked actions give distinct frames") {
    for (int id : {0, 7, 15}) {
        WorldStyle style = make_style(id);
        World w = build_world(style, 3, 4);
        for (uint8_t a = 0; a < kActionArity; ++a) {
            for (uint8_t b = static_cast<uint8_t>(a + 1); b < kActionArity; ++b) {
                auto [dra, dca] = action_delta(a);
                auto [drb, dcb] = action_delta(b);
                bool a_ok = a == kStay || !w.blocked(w.start_row + dra, w.start_col + dca);
                bool b_ok = b == kStay || !w.blocked(w.start_row + drb, w.start_col + dcb);
                if (!a_ok || !b_ok) continue;
                auto [ea, ta] = rollout(style, 3, {a, kStay}, 4);
                auto [eb, tb] = rollout(style, 3, {b, kStay}, 4);
                REQUIRE(ea.frames.v != eb.frames.v);
            }
        }
    }
}

TEST_CASE("trace consistency: agent-colored pixels sit inside the traced cell") {
    WorldStyle style = make_style(2);
    auto [ep, trace] = generate_episode(style, 9, 8, Policy::uniform_random, 4);
    const int n = 4;
    for (int tau = 0; tau < ep.frames.t; ++tau) {
        auto [r, c] = trace.positions[static_cast<size_t>(tau)];
        int found = 0;
        for (int py = 0; py < ep.frames.h; ++py) {
            for (int px = 0; px < ep.frames.w; ++px) {
                bool is_agent = ep.frames.at(tau, py, px, 0) == style.agent.r &&
                                ep.frames.at(tau, py, px, 1) == style.agent.g &&
                                ep.frames.at(tau, py, px, 2) == style.agent.b;
                if (is_agent) {
                    REQUIRE(py / n == r);
                    REQUIRE(px / n == c);
                    ++found;
                }
            }
        }
        REQUIRE(found > 0);
    }
}

TEST_CASE("dataset: corpus round-trips bit-exactly and counts match") {
    std::string path = temp_path("avid_test_corpus.avd");
    CorpusSpec spec;
    spec.styles = {0, 1, 2};
    spec.episodes_per_style = 4;
    spec.frames = 6;
    spec.cell_px = 2;
    spec.seed = 99;
    build_corpus(spec, path);

    DatasetReader reader(path);
    REQUIRE(reader.header().episode_count == 12);
    REQUIRE(reader.header().action_arity == kActionArity);
    REQUIRE(reader.header().t == 6);
    REQUIRE(reader.header().h == 16);

    auto eps = reader.read_all();
    REQUIRE(eps.size() == 12);
    for (const auto& ep : eps) {
        auto [regen, trace] = rollout(make_style(ep.style_id), ep.seed, ep.actions, spec.cell_px);
        REQUIRE(regen.frames.v == ep.frames.v);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset: same seed gives byte-identical files") {
    std::string p1 = temp_path("avid_corpus_a.avd"), p2 = temp_path("avid_corpus_b.avd");
    CorpusSpec spec;
    spec.styles = {4, 5};
    spec.episodes_per_style = 3;
    spec.frames = 4;
    spec.cell_px = 2;
    spec.seed = 123;
    build_corpus(spec, p1);
    build_corpus(spec, p2);
    REQUIRE(slurp(p1) == slurp(p2));

    spec.seed = 124;
    build_corpus(spec, p2);
    REQUIRE(slurp(p1) != slurp(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("dataset: adaptation corpus records exactly the held-out style") {
    std::string path = temp_path("avid_adapt.avd");
    CorpusSpec spec;
    spec.styles = {kHeldOutStyle};
    spec.episodes_per_style = 2;
    spec.frames = 4;
    spec.cell_px = 2;
    spec.seed = 7;
    build_corpus(spec, path);

    DatasetReader reader(path);
    auto styles = reader.styles_present();
    REQUIRE(styles.size() == 1);
    REQUIRE(*styles.begin() == kHeldOutStyle);
    REQUIRE_THROWS_AS(audit_style_holdout(path), Error);
    std::filesystem::remove(path);
}

TEST_CASE("dataset: truncation is rejected with the failing episode index") {
    std::string path = temp_path("avid_trunc.avd");
    CorpusSpec spec;
    spec.styles = {1};
    spec.episodes_per_style = 3;
    spec.frames = 4;
    spec.cell_px = 2;
    spec.seed = 50;
    build_corpus(spec, path);

    std::string bytes = slurp(path);
    DatasetHeader h = DatasetReader(path).header();
    // Keep the header plus 1.5 episodes: episode 1 is the first incomplete one.
    size_t keep = 29 + h.episode_bytes() + h.episode_bytes() / 2;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(keep));
    out.close();

    DatasetReader reader(path);
    try {
        reader.read_all();
        FAIL("expected truncation error");
    } catch (const Error& e) {
        std::string msg = e.what();
        REQUIRE(msg.find("episode 1") != std::string::npos);
        REQUIRE(msg.find("byte offset") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("dataset: checksum corruption is rejected") {
    std::string path = temp_path("avid_crc.avd");
    CorpusSpec spec;
    spec.styles = {2};
    spec.episodes_per_style = 2;
    spec.frames = 4;
    spec.cell_px = 2;
    spec.seed = 51;
    build_corpus(spec, path);

    std::string bytes = slurp(path);
    bytes[bytes.size() / 2] ^= 0x5A;  // flip payload bits
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();

    DatasetReader reader(path);
    REQUIRE_THROWS_WITH(reader.read_all(), Catch::Matchers::ContainsSubstring("checksum"));
    std::filesystem::remove(path);
}

TEST_CASE("dataset: bad magic rejected at offset zero") {
    std::string path = temp_path("avid_magic.avd");
    std::ofstream out(path, std::ios::binary);
    out.write("NOPE-not-a-dataset-file-------", 30);
    out.close();
    REQUIRE_THROWS_WITH(DatasetReader(path), Catch::Matchers::ContainsSubstring("magic"));
    std::filesystem::remove(path);
}

TEST_CASE("dataset: header-only file with zero episodes reads as empty") {
    std::string path = temp_path("avid_empty.avd");
    DatasetHeader h;
    h.t = 4;
    h.h = 16;
    h.w = 16;
    h.c = 3;
    h.episode_count = 0;
    h.corpus_seed = 1;
    DatasetWriter writer(path, h);
    writer.finish();

    DatasetReader reader(path);
    auto eps = reader.read_all();
    REQUIRE(eps.empty());
    std::filesystem::remove(path);
}

TEST_CASE("audit_style_holdout: passes on pretraining styles") {
    std::string path = temp_path("avid_pretrain.avd");
    CorpusSpec spec;
    spec.styles = {0, 1, 14};
    spec.episodes_per_style = 2;
    spec.frames = 4;
    spec.cell_px = 2;
    spec.seed = 8;
    build_corpus(spec, path);
    REQUIRE_NOTHROW(audit_style_holdout(path));
    std::filesystem::remove(path);
}
