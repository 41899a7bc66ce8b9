#include "chainfg/storage.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "chainfg/errors.hpp"

static_assert(std::endian::native == std::endian::little, "stream format assumes little-endian scalars");

namespace chainfg {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'G', '1'};

struct FactorDims {
    int gps_rd = 2;
    int between_rd;
    int motion_rd;
    int d;
    explicit FactorDims(const StateLayout& layout)
        : between_rd(layout.has_theta() ? 3 : 2), motion_rd(4 + layout.bias_dim), d(layout.state_dim()) {}
};

int lower_triangle_count(int n) { return n * (n + 1) / 2; }

// Stored-value counts for the compressed tier: whitened residual plus the
// whitening root's lower triangle plus the raw-Jacobian scalars (pose
// between: cos/sin/two theta-derivatives; motion: dt).
int compressed_values_gps() { return 2 + lower_triangle_count(2); }
int compressed_values_between(const StateLayout& layout) {
    return layout.has_theta() ? 3 + 4 + lower_triangle_count(3) : 2 + lower_triangle_count(2);
}
int compressed_values_motion(const FactorDims& fd, const StateLayout& layout) {
    const int params = layout.bias_dim == 1 ? 4 : 1;  // dt [+ cos/sin/bias]
    return fd.motion_rd + params + lower_triangle_count(fd.motion_rd);
}

std::uint8_t layout_code(const StateLayout& layout) {
    return static_cast<std::uint8_t>((layout.has_theta() ? 1 : 0) | (layout.vel_dim == 2 ? 2 : 0) |
                                     (layout.bias_dim == 1 ? 4 : 0));
}

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint8_t buf[8];
        std::memcpy(buf, &v, 8);
        bytes_.insert(bytes_.end(), buf, buf + 8);
    }
    void vec(const Vec& v) {
        for (double x : v) f64(x);
    }
    void lower_triangle(const Mat& m) {
        for (int c = 0; c < m.cols; ++c)
            for (int r = c; r < m.rows; ++r) f64(m(r, c));
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        double v;
        std::memcpy(&v, bytes_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }
    Vec vec(int count) {
        Vec v(count);
        for (int i = 0; i < count; ++i) v[i] = f64();
        return v;
    }
    Mat lower_triangle(int n) {
        Mat m(n, n);
        for (int c = 0; c < n; ++c)
            for (int r = c; r < n; ++r) m(r, c) = f64();
        return m;
    }
    std::size_t pos() const { return pos_; }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw FormatError("trailing bytes", pos_);
    }

private:
    void need(std::size_t count) const {
        if (pos_ + count > bytes_.size()) throw FormatError("truncated stream", pos_);
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const char* tier_name(StorageTier tier) {
    switch (tier) {
        case StorageTier::Dense: return "dense";
        case StorageTier::SparseTyped: return "step1";
        case StorageTier::SequentialChain: return "step2";
        case StorageTier::CompressedChain: return "step3";
    }
    return "?";
}

FootprintReport footprint(const ChainFactorGraph& graph, StorageTier tier, int scalar_bytes) {
    if (scalar_bytes != 4 && scalar_bytes != 8) throw std::invalid_argument("scalar_bytes must be 4 or 8");
    const FactorDims fd(graph.layout);
    const auto sb = static_cast<std::size_t>(scalar_bytes);

    std::size_t rows = 0;
    for ([[maybe_unused]] const auto& [j, f] : graph.gps) rows += fd.gps_rd;
    for ([[maybe_unused]] const auto& [j, f] : graph.between) rows += fd.between_rd;
    for ([[maybe_unused]] const auto& [j, f] : graph.motion) rows += fd.motion_rd;

    FootprintReport report;
    report.tier = tier;
    std::size_t values = 0;
    switch (tier) {
        case StorageTier::Dense:
            values = rows * static_cast<std::size_t>(graph.n) * fd.d + rows;
            break;
        case StorageTier::SparseTyped:
        case StorageTier::SequentialChain:
            for ([[maybe_unused]] const auto& [j, f] : graph.gps) values += fd.gps_rd + fd.gps_rd * fd.d;
            for ([[maybe_unused]] const auto& [j, f] : graph.between)
                values += fd.between_rd + 2 * fd.between_rd * fd.d;
            for ([[maybe_unused]] const auto& [j, f] : graph.motion) values += fd.motion_rd + 2 * fd.motion_rd * fd.d;
            if (tier == StorageTier::SparseTyped) {
                const std::size_t factor_count = graph.gps.size() + graph.between.size() + graph.motion.size();
                report.breakdown["types"] = factor_count;  // 1 byte per factor
                report.breakdown["indices"] =
                    4 * (graph.gps.size() + 2 * graph.between.size() + 2 * graph.motion.size());
            }
            break;
        case StorageTier::CompressedChain:
            values += graph.gps.size() * static_cast<std::size_t>(compressed_values_gps());
            values += graph.between.size() * static_cast<std::size_t>(compressed_values_between(graph.layout));
            values += graph.motion.size() * static_cast<std::size_t>(compressed_values_motion(fd, graph.layout));
            break;
    }
    report.breakdown["values"] = values * sb;
    report.bytes = 0;
    for (const auto& [k, v] : report.breakdown) report.bytes += v;
    return report;
}

std::vector<std::uint8_t> encode(const ChainFactorGraph& graph, const StateVec& states, StorageTier tier) {
    if (tier != StorageTier::SequentialChain && tier != StorageTier::CompressedChain)
        throw std::invalid_argument("encode supports the SequentialChain and CompressedChain tiers");
    if (static_cast<int>(states.size()) != graph.n) throw std::invalid_argument("states do not cover keyframes");
    if (graph.n == 0) return {};

    const StateLayout& layout = graph.layout;
    Writer w;
    w.u8(kMagic[0]);
    w.u8(kMagic[1]);
    w.u8(kMagic[2]);
    w.u8(kMagic[3]);
    w.u8(static_cast<std::uint8_t>(tier));
    w.u8(layout_code(layout));
    w.u32(static_cast<std::uint32_t>(graph.n));

    for (int i = 1; i <= graph.n; ++i) {
        const auto* g = graph.gps.count(i) ? &graph.gps.at(i) : nullptr;
        const auto* b = graph.between.count(i) ? &graph.between.at(i) : nullptr;
        const auto* m = graph.motion.count(i) ? &graph.motion.at(i) : nullptr;
        w.u8(static_cast<std::uint8_t>((g ? 1 : 0) | (b ? 2 : 0) | (m ? 4 : 0)));

        if (g) {
            const auto row = linearize(*g, states, layout);
            w.vec(row.residual);
            if (tier == StorageTier::SequentialChain)
                w.vec(row.blocks[0].block.data);
            else
                w.lower_triangle(whitening_root(g->sigma));
        }
        if (b) {
            const auto row = linearize(*b, states, layout);
            w.vec(row.residual);
            if (tier == StorageTier::SequentialChain) {
                w.vec(row.blocks[0].block.data);
                w.vec(row.blocks[1].block.data);
            } else {
                if (layout.has_theta()) {
                    const auto p = detail::between_pose_params(*b, states, layout);
                    w.f64(p.c);
                    w.f64(p.s);
                    w.f64(p.u);
                    w.f64(p.v);
                }
                w.lower_triangle(whitening_root(b->sigma));
            }
        }
        if (m) {
            const auto row = linearize(*m, states, layout);
            w.vec(row.residual);
            if (tier == StorageTier::SequentialChain) {
                w.vec(row.blocks[0].block.data);
                w.vec(row.blocks[1].block.data);
            } else {
                const auto p = detail::motion_params(*m, states, layout);
                w.f64(p.dt);
                if (layout.bias_dim == 1) {
                    w.f64(p.c);
                    w.f64(p.s);
                    w.f64(p.bias);
                }
                w.lower_triangle(whitening_root(m->sigma));
            }
        }
    }
    return w.take();
}

std::vector<WhitenedBlockRow> decode(const std::vector<std::uint8_t>& stream, const StateLayout& layout, int n,
                                     StorageTier tier) {
    if (tier != StorageTier::SequentialChain && tier != StorageTier::CompressedChain)
        throw std::invalid_argument("decode supports the SequentialChain and CompressedChain tiers");
    if (n == 0) {
        if (!stream.empty()) throw FormatError("empty graph must have an empty stream", 0);
        return {};
    }

    const FactorDims fd(layout);
    Reader r(stream);
    for (char c : kMagic)
        if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad magic", r.pos() - 1);
    if (r.u8() != static_cast<std::uint8_t>(tier)) throw FormatError("tier mismatch", r.pos() - 1);
    if (r.u8() != layout_code(layout)) throw FormatError("layout mismatch", r.pos() - 1);
    if (r.u32() != static_cast<std::uint32_t>(n)) throw FormatError("keyframe count mismatch", r.pos() - 4);

    auto read_block = [&](int rd) {
        Mat block(rd, fd.d);
        block.data = r.vec(rd * fd.d);
        return block;
    };

    std::vector<WhitenedBlockRow> rows;
    for (int i = 1; i <= n; ++i) {
        const std::uint8_t presence = r.u8();
        if ((presence & 0x06) && i == n) throw FormatError("binary factor on last keyframe", r.pos() - 1);

        if (presence & 1) {
            WhitenedBlockRow row;
            row.residual = r.vec(fd.gps_rd);
            if (tier == StorageTier::SequentialChain)
                row.blocks.push_back({i, read_block(fd.gps_rd)});
            else
                row.blocks.push_back({i, detail::gps_block(r.lower_triangle(2), layout)});
            rows.push_back(std::move(row));
        }
        if (presence & 2) {
            WhitenedBlockRow row;
            row.residual = r.vec(fd.between_rd);
            if (tier == StorageTier::SequentialChain) {
                row.blocks.push_back({i, read_block(fd.between_rd)});
                row.blocks.push_back({i + 1, read_block(fd.between_rd)});
            } else if (layout.has_theta()) {
                detail::BetweenPoseParams p;
                p.c = r.f64();
                p.s = r.f64();
                p.u = r.f64();
                p.v = r.f64();
                auto [bj, bj1] = detail::between_blocks_pose(r.lower_triangle(3), p, layout);
                row.blocks.push_back({i, std::move(bj)});
                row.blocks.push_back({i + 1, std::move(bj1)});
            } else {
                auto [bj, bj1] = detail::between_blocks_linear(r.lower_triangle(2), layout);
                row.blocks.push_back({i, std::move(bj)});
                row.blocks.push_back({i + 1, std::move(bj1)});
            }
            rows.push_back(std::move(row));
        }
        if (presence & 4) {
            WhitenedBlockRow row;
            row.residual = r.vec(fd.motion_rd);
            if (tier == StorageTier::SequentialChain) {
                row.blocks.push_back({i, read_block(fd.motion_rd)});
                row.blocks.push_back({i + 1, read_block(fd.motion_rd)});
            } else {
                detail::MotionParams p;
                p.dt = r.f64();
                if (layout.bias_dim == 1) {
                    p.c = r.f64();
                    p.s = r.f64();
                    p.bias = r.f64();
                }
                auto [bj, bj1] = detail::motion_blocks(r.lower_triangle(fd.motion_rd), p, layout);
                row.blocks.push_back({i, std::move(bj)});
                row.blocks.push_back({i + 1, std::move(bj1)});
            }
            rows.push_back(std::move(row));
        }
    }
    r.expect_end();
    return rows;
}

}  // namespace chainfg
