#include "chainfg/errors.hpp"
#include "chainfg/storage.hpp"
#include "chainfg/synth.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace chainfg;
using namespace testsupport;

namespace {

bool rows_bit_equal(const std::vector<WhitenedBlockRow>& a, const std::vector<WhitenedBlockRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].residual != b[i].residual) return false;
        if (a[i].blocks.size() != b[i].blocks.size()) return false;
        for (std::size_t k = 0; k < a[i].blocks.size(); ++k) {
            if (a[i].blocks[k].index != b[i].blocks[k].index) return false;
            if (!bit_equal(a[i].blocks[k].block, b[i].blocks[k].block)) return false;
        }
    }
    return true;
}

ChainFactorGraph full_complement_chain(int n, std::mt19937_64& rng) {
    RandomChainOptions opt;
    opt.gps_prob = 1.0;
    opt.motion_prob = 1.0;
    return random_chain(n, StateLayout::full_mode(), rng, opt);
}

}  // namespace

TEST_SUITE("storage") {

TEST_CASE("hand counts: single gps keyframe") {
    ChainFactorGraph g;
    g.layout = StateLayout::linear_mode();
    g.n = 1;
    g.gps[1] = GpsFactor{1, 0.0, 0.0, Mat::identity(2)};
    CHECK(footprint(g, StorageTier::Dense, 8).bytes == 48);
    CHECK(footprint(g, StorageTier::SequentialChain, 8).bytes == 48);
    CHECK(footprint(g, StorageTier::SparseTyped, 8).bytes == 48 + 1 + 4);
    CHECK(footprint(g, StorageTier::CompressedChain, 8).bytes == (2 + 3) * 8);
}

TEST_CASE("hand counts: toy graph tiers in strict order") {
    const auto g = toy_example();
    const auto dense = footprint(g, StorageTier::Dense, 8);
    const auto step1 = footprint(g, StorageTier::SparseTyped, 8);
    const auto step2 = footprint(g, StorageTier::SequentialChain, 8);
    const auto step3 = footprint(g, StorageTier::CompressedChain, 8);
    CHECK(dense.bytes == 1008);  // (14*8 + 14) * 8
    CHECK(step1.bytes == 54 * 8 + 7 + 40);
    CHECK(step2.bytes == 54 * 8);
    CHECK(step3.bytes == 35 * 8);
    CHECK(dense.bytes > step1.bytes);
    CHECK(step1.bytes > step2.bytes);
    CHECK(step2.bytes > step3.bytes);
}

TEST_CASE("breakdown sums to the total") {
    const auto g = toy_example();
    for (auto tier : {StorageTier::Dense, StorageTier::SparseTyped, StorageTier::SequentialChain,
                      StorageTier::CompressedChain}) {
        const auto fp = footprint(g, tier, 4);
        std::size_t sum = 0;
        for (const auto& [k, v] : fp.breakdown) sum += v;
        CHECK(sum == fp.bytes);
    }
}

TEST_CASE("monotone tier ordering on random graphs (n >= 2)") {
    auto rng = make_rng(71);
    for (const auto& layout : {StateLayout::linear_mode(), StateLayout::pose_mode(), StateLayout::full_mode()}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 2 + static_cast<int>(uniform(rng, 0, 14));
            const auto g = random_chain(n, layout, rng);
            const auto d = footprint(g, StorageTier::Dense, 8).bytes;
            const auto s1 = footprint(g, StorageTier::SparseTyped, 8).bytes;
            const auto s2 = footprint(g, StorageTier::SequentialChain, 8).bytes;
            const auto s3 = footprint(g, StorageTier::CompressedChain, 8).bytes;
            CHECK(d > s1);
            CHECK(s1 > s2);
            CHECK(s2 >= s3);
        }
    }
}

TEST_CASE("compact tiers grow affinely in n; dense grows quadratically") {
    auto rng = make_rng(72);
    std::vector<std::size_t> dense, s1, s2, s3;
    for (int n = 4; n <= 20; n += 4) {
        RandomChainOptions opt;
        opt.gps_prob = 1.0;
        opt.motion_prob = 1.0;
        const auto g = random_chain(n, StateLayout::full_mode(), rng, opt);
        dense.push_back(footprint(g, StorageTier::Dense, 8).bytes);
        s1.push_back(footprint(g, StorageTier::SparseTyped, 8).bytes);
        s2.push_back(footprint(g, StorageTier::SequentialChain, 8).bytes);
        s3.push_back(footprint(g, StorageTier::CompressedChain, 8).bytes);
    }
    auto second_diff_zero = [](const std::vector<std::size_t>& v) {
        for (std::size_t i = 2; i < v.size(); ++i)
            if (v[i] - v[i - 1] != v[i - 1] - v[i - 2]) return false;
        return true;
    };
    CHECK(second_diff_zero(s1));
    CHECK(second_diff_zero(s2));
    CHECK(second_diff_zero(s3));
    for (std::size_t i = 2; i < dense.size(); ++i)
        CHECK(dense[i] - dense[i - 1] > dense[i - 1] - dense[i - 2]);
}

TEST_CASE("round trip is bit-exact for both compact tiers") {
    auto rng = make_rng(73);
    for (const auto& layout : {StateLayout::linear_mode(), StateLayout::pose_mode(), StateLayout::full_mode()}) {
        for (int trial = 0; trial < 8; ++trial) {
            const int n = 1 + static_cast<int>(uniform(rng, 0, 31));
            const auto g = random_chain(n, layout, rng);
            const auto states = random_states(n, layout, rng);
            const auto expected = linearize_all(g, states);
            for (auto tier : {StorageTier::SequentialChain, StorageTier::CompressedChain}) {
                const auto stream = encode(g, states, tier);
                const auto decoded = decode(stream, layout, n, tier);
                CHECK(rows_bit_equal(decoded, expected));
            }
        }
    }
}

TEST_CASE("compressed stream is strictly smaller than sequential") {
    auto rng = make_rng(74);
    const auto g = full_complement_chain(12, rng);
    const auto states = random_states(12, StateLayout::full_mode(), rng);
    CHECK(encode(g, states, StorageTier::CompressedChain).size() <
          encode(g, states, StorageTier::SequentialChain).size());
}

TEST_CASE("empty graph encodes to an empty stream") {
    ChainFactorGraph g;
    g.layout = StateLayout::linear_mode();
    CHECK(encode(g, {}, StorageTier::SequentialChain).empty());
    CHECK(decode({}, g.layout, 0, StorageTier::SequentialChain).empty());
}

TEST_CASE("a truncated stream raises a format error with an offset") {
    const auto g = toy_example();
    const auto truth = toy_ground_truth();
    auto stream = encode(g, truth, StorageTier::CompressedChain);
    stream.pop_back();
    try {
        decode(stream, g.layout, 4, StorageTier::CompressedChain);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() <= stream.size());
    }
}

TEST_CASE("header mismatches are format errors") {
    const auto g = toy_example();
    const auto truth = toy_ground_truth();
    const auto stream = encode(g, truth, StorageTier::SequentialChain);
    CHECK_THROWS_AS(decode(stream, g.layout, 4, StorageTier::CompressedChain), FormatError);
    CHECK_THROWS_AS(decode(stream, StateLayout::pose_mode(), 4, StorageTier::SequentialChain), FormatError);
    CHECK_THROWS_AS(decode(stream, g.layout, 5, StorageTier::SequentialChain), FormatError);

    auto corrupt = stream;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(decode(corrupt, g.layout, 4, StorageTier::SequentialChain), FormatError);
}

TEST_CASE("trailing bytes are rejected") {
    const auto g = toy_example();
    auto stream = encode(g, toy_ground_truth(), StorageTier::SequentialChain);
    stream.push_back(0);
    CHECK_THROWS_AS(decode(stream, g.layout, 4, StorageTier::SequentialChain), FormatError);
}

TEST_CASE("footprint validates scalar width") {
    CHECK_THROWS_AS(footprint(toy_example(), StorageTier::Dense, 6), std::invalid_argument);
}

}  // TEST_SUITE
