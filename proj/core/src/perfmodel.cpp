#include "chainfg/perfmodel.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace chainfg {

namespace {

struct PipeCost {
    double pipeline = 0.0;
    double eval_sum = 0.0;
    double update_sum = 0.0;
};

PipeCost pipe_cost(int m, int n, int k, const PipelineConfig& cfg) {
    if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("qr_cycles: k outside [1, min(m, n)]");
    if (cfg.n_u < 1 || !(cfg.eval_cycles_per_row > 0.0) || !(cfg.update_cycles_per_entry > 0.0))
        throw std::invalid_argument("qr_cycles: invalid pipeline config");

    auto eval = [&](int j) { return cfg.eval_cycles_per_row * (m - j + 1); };
    auto update = [&](int j) {
        return cfg.update_cycles_per_entry * (m - j + 1) * (n - j + 1) / cfg.n_u;
    };

    PipeCost c;
    c.pipeline = eval(1);
    for (int j = 1; j <= k; ++j) {
        c.eval_sum += eval(j);
        c.update_sum += update(j);
        c.pipeline += (j < k) ? std::max(update(j), eval(j + 1)) : update(k);
    }
    return c;
}

struct SimStep {
    int stage;
    int index;
    int rows;
    int cols;
};

int binary_rows(const ChainFactorGraph& g, int key) {
    int rd = 0;
    if (g.between.count(key)) rd += g.layout.has_theta() ? 3 : 2;
    if (g.motion.count(key)) rd += 4 + g.layout.bias_dim;
    return rd;
}

int gps_rows(const ChainFactorGraph& g, int i) { return g.gps.count(i) ? 2 : 0; }

/// Structural replay of the elimination schedules: row counts depend only on
/// factor presence, so no linearization is needed. Mirrors eliminate.cpp.
std::vector<SimStep> simulate_trace(const ChainFactorGraph& g, EliminationMode mode) {
    const int n = g.n;
    const int d = g.state_dim();
    std::vector<SimStep> steps;
    if (n == 0) return steps;

    if (mode == EliminationMode::Serial) {
        int tau = 0;
        for (int i = 1; i <= n; ++i) {
            const int bin = (i < n) ? binary_rows(g, i) : 0;
            const int rows = tau + gps_rows(g, i) + bin;
            steps.push_back({i, i, rows, bin > 0 ? 2 * d : d});
            tau = bin > 0 ? std::max(0, rows - d) : 0;
        }
        return steps;
    }

    const int p = (n - 1) / 2;
    const bool even = (n % 2 == 0);
    const int root = even ? p + 2 : p + 1;

    int tau_left = 0;
    const int left_last = even ? p + 1 : p;
    for (int i = 1; i <= left_last; ++i) {
        const int bin = binary_rows(g, i);
        const int rows = tau_left + gps_rows(g, i) + bin;
        steps.push_back({i, i, rows, bin > 0 ? 2 * d : d});
        tau_left = bin > 0 ? std::max(0, rows - d) : 0;
    }
    int tau_right = 0;
    for (int s = 1; s <= p; ++s) {
        const int i = n + 1 - s;
        const int bin = binary_rows(g, i - 1);
        const int rows = tau_right + gps_rows(g, i) + bin;
        steps.push_back({s, i, rows, bin > 0 ? 2 * d : d});
        tau_right = bin > 0 ? std::max(0, rows - d) : 0;
    }
    steps.push_back({even ? p + 2 : p + 1, root, tau_left + tau_right + gps_rows(g, root), d});

    std::stable_sort(steps.begin(), steps.end(), [](const SimStep& a, const SimStep& b) {
        if (a.stage != b.stage) return a.stage < b.stage;
        return a.index < b.index;
    });
    return steps;
}

}  // namespace

double qr_cycles(int m, int n, int k, const PipelineConfig& cfg) { return pipe_cost(m, n, k, cfg).pipeline; }

CycleReport elimination_cycles(const ChainFactorGraph& graph, EliminationMode mode, const PipelineConfig& cfg) {
    const int n = graph.n;
    const int d = graph.state_dim();
    CycleReport report;
    if (n == 0) return report;

    const auto sim = simulate_trace(graph, mode);

    double eval_sum = 0.0;
    double update_sum = 0.0;
    std::map<int, double> stage_max;
    std::map<int, double> stage_sum;
    for (const auto& s : sim) {
        const auto c = pipe_cost(s.rows, s.cols, d, cfg);
        report.per_step.push_back({s.stage, s.index, s.rows, s.cols, c.pipeline});
        report.max_abar_rows = std::max(report.max_abar_rows, s.rows);
        eval_sum += c.eval_sum;
        update_sum += c.update_sum;
        stage_max[s.stage] = std::max(stage_max[s.stage], c.pipeline);
        stage_sum[s.stage] += c.pipeline;
    }

    const bool lanes = cfg.dual_lane && mode == EliminationMode::Parallel;
    for (const auto& [stage, cycles] : (lanes ? stage_max : stage_sum)) report.total_cycles += cycles;

    // Back substitution: one Update-entry cost per stored R entry.
    const int root = (mode == EliminationMode::Serial) ? n : ((n % 2 == 0) ? (n - 1) / 2 + 2 : (n - 1) / 2 + 1);
    const double tri = d * (d + 1) / 2.0;
    double left = 0.0, right = 0.0, root_entries = tri;
    for (int i = 1; i <= n; ++i) {
        if (i == root) continue;
        const double entries = tri + static_cast<double>(d) * d;
        (i < root ? left : right) += entries;
    }
    report.back_substitution_cycles =
        cfg.update_cycles_per_entry * (lanes ? root_entries + std::max(left, right) : root_entries + left + right);

    const double units = 2.0 * (lanes ? 2.0 : 1.0);
    if (report.total_cycles > 0.0)
        report.utilization = (eval_sum + update_sum) / (report.total_cycles * units);
    return report;
}

std::vector<SweepRow> sweep(const std::vector<int>& nu_grid, const ChainFactorGraph& graph,
                            const PipelineConfig& base) {
    if (nu_grid.empty()) throw std::invalid_argument("sweep: empty grid");
    std::vector<SweepRow> rows;
    for (int nu : nu_grid) {
        for (EliminationMode mode : {EliminationMode::Serial, EliminationMode::Parallel}) {
            PipelineConfig cfg = base;
            cfg.n_u = nu;
            const auto rep = elimination_cycles(graph, mode, cfg);
            rows.push_back({mode, nu, rep.total_cycles + rep.back_substitution_cycles, rep.max_abar_rows,
                            rep.utilization});
        }
    }
    return rows;
}

}  // namespace chainfg
