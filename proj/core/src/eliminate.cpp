#include "chainfg/eliminate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "chainfg/blockla.hpp"
#include "chainfg/errors.hpp"

namespace chainfg {

namespace {

template <typename M>
const typename M::mapped_type* find_ptr(const M& m, int key) {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

void check_nonsingular(const Mat& r, int index) {
    for (int c = 0; c < r.cols; ++c) {
        double colnorm = 0.0;
        for (int j = 0; j <= c; ++j) colnorm += r(j, c) * r(j, c);
        colnorm = std::sqrt(colnorm);
        if (std::abs(r(c, c)) <= 1e-12 * colnorm)
            throw SingularSystemError("variable x" + std::to_string(index) + " under-constrained", index);
    }
}

}  // namespace

EliminationStep eliminate_step(const AbarInputs& in, int index, Direction dir, const StateVec& states,
                               const StateLayout& layout) {
    const int d = layout.state_dim();
    Mat abar = build_abar(in, index, dir, states, layout);
    if (abar.rows < d)
        throw SingularSystemError("variable x" + std::to_string(index) + " under-constrained", index);

    auto qr = partial_qr(abar, d);
    const bool has_sep = (abar.cols == 2 * d + 1);

    EliminationStep out;
    out.cond.index = index;
    out.cond.r_block = qr.r_top.block(0, 0, d, d);
    out.cond.d_block = qr.r_top.block(0, abar.cols - 1, d, 1).data;
    if (has_sep) {
        out.cond.t_block = qr.r_top.block(0, d, d, d);
        out.cond.parent = (dir == Direction::Forward) ? index + 1 : index - 1;
    }
    check_nonsingular(out.cond.r_block, index);

    if (has_sep && qr.tail.rows > 0) {
        TauFactor tau;
        tau.on_index = *out.cond.parent;
        tau.a_block = qr.tail.block(0, 0, qr.tail.rows, d);
        tau.rhs = qr.tail.block(0, d, qr.tail.rows, 1).data;
        out.tau = std::move(tau);
    }
    out.trace = StepTrace{0, index, abar.rows, abar.cols - 1};
    return out;
}

Mat build_abar(const AbarInputs& in, int index, Direction direction, const StateVec& states,
               const StateLayout& layout) {
    const int d = layout.state_dim();
    const int sep = (direction == Direction::Forward) ? index + 1 : index - 1;
    const int binary_key = std::min(index, sep);

    if (in.between && in.between->index != binary_key)
        throw ChainViolationError("between factor b" + std::to_string(in.between->index) +
                                  " does not connect x" + std::to_string(index) + " to x" + std::to_string(sep));
    if (in.motion && in.motion->index != binary_key)
        throw ChainViolationError("motion factor m" + std::to_string(in.motion->index) +
                                  " does not connect x" + std::to_string(index) + " to x" + std::to_string(sep));
    for (const TauFactor* tau : in.taus)
        if (tau->on_index != index)
            throw ChainViolationError("tau factor on x" + std::to_string(tau->on_index) +
                                      " stacked while eliminating x" + std::to_string(index));

    const bool has_binary = (in.between != nullptr) || (in.motion != nullptr);

    int rows = 0;
    for (const TauFactor* tau : in.taus) rows += tau->a_block.rows;
    std::vector<WhitenedBlockRow> frows;
    if (in.gps) frows.push_back(linearize(*in.gps, states, layout));
    if (in.between) frows.push_back(linearize(*in.between, states, layout));
    if (in.motion) frows.push_back(linearize(*in.motion, states, layout));
    for (const auto& r : frows) rows += static_cast<int>(r.residual.size());

    const int cols = (has_binary ? 2 * d : d) + 1;
    Mat abar(rows, cols);
    int at = 0;
    for (const TauFactor* tau : in.taus) {
        abar.set_block(at, 0, tau->a_block);
        for (int r = 0; r < tau->a_block.rows; ++r) abar(at + r, cols - 1) = tau->rhs[r];
        at += tau->a_block.rows;
    }
    for (const auto& row : frows) {
        for (const auto& e : row.blocks) abar.set_block(at, e.index == index ? 0 : d, e.block);
        for (int r = 0; r < static_cast<int>(row.residual.size()); ++r) abar(at + r, cols - 1) = row.residual[r];
        at += static_cast<int>(row.residual.size());
    }
    return abar;
}

EliminationResult eliminate_serial(const ChainFactorGraph& graph, const StateVec& states) {
    const int n = graph.n;
    EliminationResult res;
    res.net.mode = EliminationMode::Serial;
    res.net.root_index = n;
    res.net.conditionals.resize(n);

    std::optional<TauFactor> carry;
    for (int i = 1; i <= n; ++i) {
        AbarInputs in;
        if (carry) in.taus.push_back(&*carry);
        in.gps = find_ptr(graph.gps, i);
        if (i < n) {
            in.between = find_ptr(graph.between, i);
            in.motion = find_ptr(graph.motion, i);
        }
        auto so = eliminate_step(in, i, Direction::Forward, states, graph.layout);
        so.trace.stage = i;
        res.trace.push_back(so.trace);
        res.net.conditionals[i - 1] = std::move(so.cond);
        carry = std::move(so.tau);
        if (carry) res.tau_cache[carry->on_index].push_back(*carry);
    }
    return res;
}

EliminationResult eliminate_parallel(const ChainFactorGraph& graph, const StateVec& states, ExecPolicy policy) {
    const int n = graph.n;
    EliminationResult res;
    res.net.mode = EliminationMode::Parallel;
    res.net.conditionals.resize(n);
    res.net.root_index = 0;
    if (n == 0) return res;

    const int p = (n - 1) / 2;  // conflict-free pair stages
    const bool even = (n % 2 == 0);
    const int root = even ? p + 2 : p + 1;
    res.net.root_index = root;

    struct LaneOut {
        std::vector<ChainConditional> conds;
        std::vector<StepTrace> traces;
        std::optional<TauFactor> tau_to_root;
        std::map<int, std::vector<TauFactor>> taus;
    };

    // Left lane: forward sweep up to the conflict boundary (for even n this
    // includes the left-middle variable, whose separator is the root).
    auto run_left = [&graph, &states, p, even]() {
        LaneOut lo;
        std::optional<TauFactor> carry;
        const int last = even ? p + 1 : p;
        for (int i = 1; i <= last; ++i) {
            AbarInputs in;
            if (carry) in.taus.push_back(&*carry);
            in.gps = find_ptr(graph.gps, i);
            in.between = find_ptr(graph.between, i);
            in.motion = find_ptr(graph.motion, i);
            auto so = eliminate_step(in, i, Direction::Forward, states, graph.layout);
            so.trace.stage = i;
            lo.traces.push_back(so.trace);
            lo.conds.push_back(std::move(so.cond));
            carry = std::move(so.tau);
            if (carry) lo.taus[carry->on_index].push_back(*carry);
        }
        lo.tau_to_root = std::move(carry);
        return lo;
    };

    // Right lane: backward sweep n, n-1, ... over the pair stages.
    auto run_right = [&graph, &states, p, n]() {
        LaneOut lo;
        std::optional<TauFactor> carry;
        for (int s = 1; s <= p; ++s) {
            const int i = n + 1 - s;
            AbarInputs in;
            if (carry) in.taus.push_back(&*carry);
            in.gps = find_ptr(graph.gps, i);
            in.between = find_ptr(graph.between, i - 1);
            in.motion = find_ptr(graph.motion, i - 1);
            auto so = eliminate_step(in, i, Direction::Backward, states, graph.layout);
            so.trace.stage = s;
            lo.traces.push_back(so.trace);
            lo.conds.push_back(std::move(so.cond));
            carry = std::move(so.tau);
            if (carry) lo.taus[carry->on_index].push_back(*carry);
        }
        lo.tau_to_root = std::move(carry);
        return lo;
    };

    LaneOut left, right;
    if (policy == ExecPolicy::DualThread) {
        std::exception_ptr lane_error;
        std::thread t([&right, &run_right, &lane_error]() {
            try {
                right = run_right();
            } catch (...) {
                lane_error = std::current_exception();
            }
        });
        try {
            left = run_left();
        } catch (...) {
            t.join();
            throw;
        }
        t.join();
        if (lane_error) std::rethrow_exception(lane_error);
    } else {
        left = run_left();
        right = run_right();
    }

    // Root step: both lane taus (left first) plus the root's unary factor.
    AbarInputs root_in;
    if (left.tau_to_root) root_in.taus.push_back(&*left.tau_to_root);
    if (right.tau_to_root) root_in.taus.push_back(&*right.tau_to_root);
    root_in.gps = find_ptr(graph.gps, root);
    auto root_step = eliminate_step(root_in, root, Direction::Forward, states, graph.layout);
    root_step.trace.stage = even ? p + 2 : p + 1;

    for (auto& c : left.conds) res.net.conditionals[c.index - 1] = std::move(c);
    for (auto& c : right.conds) res.net.conditionals[c.index - 1] = std::move(c);
    res.net.conditionals[root - 1] = std::move(root_step.cond);

    // Deterministic trace order: per stage left before right, root last.
    const int max_stage = even ? p + 1 : p;
    for (int s = 1; s <= max_stage; ++s) {
        for (const auto& t : left.traces)
            if (t.stage == s) res.trace.push_back(t);
        for (const auto& t : right.traces)
            if (t.stage == s) res.trace.push_back(t);
    }
    res.trace.push_back(root_step.trace);

    res.tau_cache = std::move(left.taus);
    for (auto& [k, v] : right.taus)
        for (auto& tau : v) res.tau_cache[k].push_back(std::move(tau));
    return res;
}

namespace {

void solve_conditional(const ChainBayesNet& net, int index, const double* parent_delta, Vec& delta) {
    const auto& c = net.conditionals[index - 1];
    const int d = c.r_block.rows;
    Vec rhs = c.d_block;
    if (c.parent) {
        for (int col = 0; col < c.t_block.cols; ++col) {
            const double pd = parent_delta[col];
            if (pd == 0.0) continue;
            for (int r = 0; r < c.t_block.rows; ++r) rhs[r] -= c.t_block(r, col) * pd;
        }
    }
    Vec di = back_substitute(c.r_block, rhs);
    std::copy(di.begin(), di.end(), delta.begin() + static_cast<std::ptrdiff_t>(index - 1) * d);
}

void sweep_left_of_root(const ChainBayesNet& net, Vec& delta) {
    const int d = net.state_dim();
    for (int i = net.root_index - 1; i >= 1; --i) {
        if (net.conditionals[i - 1].parent != i + 1)
            throw std::invalid_argument("conditional x" + std::to_string(i) + " does not point toward the root");
        solve_conditional(net, i, delta.data() + static_cast<std::ptrdiff_t>(i) * d, delta);
    }
}

void sweep_right_of_root(const ChainBayesNet& net, Vec& delta) {
    const int d = net.state_dim();
    for (int i = net.root_index + 1; i <= net.n(); ++i) {
        if (net.conditionals[i - 1].parent != i - 1)
            throw std::invalid_argument("conditional x" + std::to_string(i) + " does not point toward the root");
        solve_conditional(net, i, delta.data() + static_cast<std::ptrdiff_t>(i - 2) * d, delta);
    }
}

Vec solve_net_impl(const ChainBayesNet& net, ExecPolicy policy) {
    const int n = net.n();
    if (n == 0) return {};
    const int d = net.state_dim();
    Vec delta(static_cast<std::size_t>(n) * d, 0.0);

    const int root = net.root_index;
    if (root < 1 || root > n) throw std::invalid_argument("invalid root index");
    if (net.conditionals[root - 1].parent) throw std::invalid_argument("root conditional has a parent");
    solve_conditional(net, root, nullptr, delta);

    if (policy == ExecPolicy::DualThread) {
        std::exception_ptr sweep_error;
        std::thread t([&]() {
            try {
                sweep_right_of_root(net, delta);
            } catch (...) {
                sweep_error = std::current_exception();
            }
        });
        try {
            sweep_left_of_root(net, delta);
        } catch (...) {
            t.join();
            throw;
        }
        t.join();
        if (sweep_error) std::rethrow_exception(sweep_error);
    } else {
        sweep_left_of_root(net, delta);
        sweep_right_of_root(net, delta);
    }
    return delta;
}

}  // namespace

Vec back_substitute_serial(const ChainBayesNet& net) {
    if (net.mode != EliminationMode::Serial)
        throw std::invalid_argument("back_substitute_serial requires a serial-mode net");
    return solve_net_impl(net, ExecPolicy::SingleThread);
}

Vec back_substitute_parallel(const ChainBayesNet& net, ExecPolicy policy) {
    if (net.mode != EliminationMode::Parallel)
        throw std::invalid_argument("back_substitute_parallel requires a parallel-mode net");
    return solve_net_impl(net, policy);
}

Vec solve_net(const ChainBayesNet& net) { return solve_net_impl(net, ExecPolicy::SingleThread); }

int fill_in_count(const ChainBayesNet& net) {
    int count = 0;
    for (const auto& c : net.conditionals)
        if (!c.t_block.empty()) ++count;
    return count;
}

}  // namespace chainfg
