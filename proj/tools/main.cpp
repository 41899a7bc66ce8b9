#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainfg/blockla.hpp"
#include "chainfg/errors.hpp"
#include "chainfg/incremental.hpp"
#include "chainfg/io.hpp"
#include "chainfg/metrics.hpp"
#include "chainfg/perfmodel.hpp"
#include "chainfg/solver.hpp"
#include "chainfg/storage.hpp"
#include "chainfg/synth.hpp"

namespace {

using namespace chainfg;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitNumerical = 4;

StateLayout layout_or_die(const std::string& name) {
    auto layout = layout_from_name(name);
    if (!layout) throw CLI::ValidationError("--layout", "unknown layout '" + name + "'");
    return *layout;
}

NoiseSpec parse_noise(const std::string& spec) {
    NoiseSpec noise;
    if (spec.empty()) return noise;
    std::size_t start = 0;
    while (start <= spec.size()) {
        auto comma = spec.find(',', start);
        const std::string item = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--noise", "expected key=value in '" + item + "'");
        const std::string key = item.substr(0, eq);
        const double value = std::stod(item.substr(eq + 1));
        if (key == "gps")
            noise.gps = value;
        else if (key == "lidar")
            noise.lidar = value;
        else if (key == "motion")
            noise.motion = value;
        else
            throw CLI::ValidationError("--noise", "unknown sensor '" + key + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return noise;
}

std::vector<int> parse_grid(const std::string& spec) {
    const auto dots = spec.find("..");
    std::vector<int> grid;
    if (dots == std::string::npos) {
        grid.push_back(std::stoi(spec));
        return grid;
    }
    const int lo = std::stoi(spec.substr(0, dots));
    const int hi = std::stoi(spec.substr(dots + 2));
    if (lo < 1 || hi < lo) throw CLI::ValidationError("--nu-grid", "expected A..B with 1 <= A <= B");
    for (int v = lo; v <= hi; ++v) grid.push_back(v);
    return grid;
}

KeyframeState compose(const KeyframeState& base, const BetweenFactor& z, const StateLayout& layout) {
    KeyframeState next = base;
    if (layout.has_theta()) {
        const double c = std::cos(base.theta), s = std::sin(base.theta);
        next.x = base.x + c * z.dx - s * z.dy;
        next.y = base.y + s * z.dx + c * z.dy;
        next.theta = wrap_angle(base.theta + z.dtheta);
    } else {
        next.x = base.x + z.dx;
        next.y = base.y + z.dy;
    }
    return next;
}

/// Dead-reckoned initial guess: anchor at the first GPS fix, chain the
/// between measurements, difference positions for velocities.
StateVec initial_guess(const ChainFactorGraph& g) {
    StateVec states(g.n);
    if (g.n == 0) return states;
    if (auto it = g.gps.find(1); it != g.gps.end()) {
        states[0].x = it->second.zx;
        states[0].y = it->second.zy;
    }
    for (int i = 1; i < g.n; ++i) {
        if (auto it = g.between.find(i); it != g.between.end())
            states[i] = compose(states[i - 1], it->second, g.layout);
        else if (auto gt = g.gps.find(i + 1); gt != g.gps.end()) {
            states[i] = states[i - 1];
            states[i].x = gt->second.zx;
            states[i].y = gt->second.zy;
        } else
            states[i] = states[i - 1];
    }
    if (g.layout.vel_dim == 2) {
        for (int i = 0; i < g.n; ++i) {
            double dt = 1.0;
            if (auto it = g.motion.find(i + 1); it != g.motion.end()) dt = it->second.dt;
            if (i + 1 < g.n) {
                states[i].vx = (states[i + 1].x - states[i].x) / dt;
                states[i].vy = (states[i + 1].y - states[i].y) / dt;
            } else if (i > 0) {
                states[i].vx = states[i - 1].vx;
                states[i].vy = states[i - 1].vy;
            }
        }
    }
    return states;
}

struct GenArgs {
    int n = 10;
    std::string layout = "linear";
    std::string noise = "gps=0.1,lidar=0.05,motion=0.02";
    std::uint64_t seed = 1;
    std::string out = "measurements.txt";
    std::string truth;
};

int run_gen(const GenArgs& args) {
    const auto layout = layout_or_die(args.layout);
    const auto data = generate_dataset(args.n, layout, parse_noise(args.noise), args.seed);
    const std::string truth_path = args.truth.empty() ? args.out + ".truth.csv" : args.truth;
    atomic_write(args.out, format_measurements(data.graph));
    atomic_write(truth_path, format_trajectory_csv(data.truth));
    std::cout << "wrote " << args.out << " and " << truth_path << " (" << args.n << " keyframes, layout "
              << layout_name(layout) << ")\n";
    return kExitOk;
}

struct SolveArgs {
    std::string input;
    std::string mode = "serial";
    std::string layout;
    std::string out = "estimate.csv";
    std::string report;
    bool oracle = false;
};

int run_solve(const SolveArgs& args) {
    std::optional<StateLayout> layout_override;
    if (!args.layout.empty()) layout_override = layout_or_die(args.layout);
    const auto graph = build_graph(read_measurement_file(args.input, layout_override));

    SolveConfig cfg;
    if (args.mode == "parallel")
        cfg.mode = EliminationMode::Parallel;
    else if (args.mode != "serial")
        throw CLI::ValidationError("--mode", "expected serial or parallel");

    const auto [estimate, report] = gauss_newton(graph, initial_guess(graph), cfg);
    atomic_write(args.out, format_trajectory_csv(states_to_trajectory(estimate, graph.layout)));
    if (!args.report.empty()) atomic_write(args.report, format_solve_report(report));

    std::cout << "iterations " << report.iterations << " final_cost " << format_double(report.final_cost)
              << " converged " << (report.converged ? "yes" : "no") << "\n";

    if (args.oracle) {
        const auto sys = assemble(graph, estimate);
        const Vec reference = normal_solve_oracle(sys.jacobian, sys.rhs);
        const auto res = cfg.mode == EliminationMode::Serial ? eliminate_serial(graph, estimate)
                                                             : eliminate_parallel(graph, estimate);
        const Vec delta = cfg.mode == EliminationMode::Serial ? back_substitute_serial(res.net)
                                                              : back_substitute_parallel(res.net);
        std::cout << "oracle max deviation " << format_double(max_abs_diff(delta, reference)) << "\n";
    }
    return report.converged ? kExitOk : kExitNoConvergence;
}

struct SmoothArgs {
    std::string input;
    std::string layout;
    std::string out = "estimate.csv";
    std::string report;
};

int run_smooth(const SmoothArgs& args) {
    std::optional<StateLayout> layout_override;
    if (!args.layout.empty()) layout_override = layout_or_die(args.layout);
    const auto file = read_measurement_file(args.input, layout_override);

    // Bucket records by arrival keyframe (binary factors arrive with their
    // later endpoint) and insist the stream is ordered.
    struct Bucket {
        std::optional<GpsFactor> gps;
        std::optional<BetweenFactor> between;
        std::optional<MotionFactor> motion;
    };
    std::map<int, Bucket> buckets;
    int frontier = 0;
    for (const auto& rec : file.records) {
        int arrival = 0;
        if (const auto* f = std::get_if<GpsFactor>(&rec.factor)) {
            arrival = f->index;
            if (buckets[arrival].gps) throw ParseError("duplicate GPS record", rec.line);
            buckets[arrival].gps = *f;
        } else if (const auto* f = std::get_if<BetweenFactor>(&rec.factor)) {
            arrival = f->index + 1;
            if (buckets[arrival].between) throw ParseError("duplicate BETWEEN record", rec.line);
            buckets[arrival].between = *f;
        } else if (const auto* f = std::get_if<MotionFactor>(&rec.factor)) {
            arrival = f->index + 1;
            if (buckets[arrival].motion) throw ParseError("duplicate MOTION record", rec.line);
            buckets[arrival].motion = *f;
        }
        if (arrival < frontier) throw ParseError("out-of-order record", rec.line);
        frontier = std::max(frontier, arrival);
    }
    if (buckets.empty()) throw ParseError("no measurements", 1);
    const int n = buckets.rbegin()->first;

    // Without prior factors a short prefix can be under-determined (a lone
    // pose has no heading information, velocities need a few motion factors),
    // so keyframes are buffered until the accumulated prefix first solves.
    auto prefix_graph = [&](int upto) {
        ChainFactorGraph g;
        g.layout = file.layout;
        g.n = upto;
        for (int k = 1; k <= upto; ++k) {
            if (auto it = buckets.find(k); it != buckets.end()) {
                if (it->second.gps) g.gps[k] = *it->second.gps;
                if (it->second.between) g.between[k - 1] = *it->second.between;
                if (it->second.motion) g.motion[k - 1] = *it->second.motion;
            }
        }
        return g;
    };
    auto dead_reckon = [&](int upto) {
        StateVec states(upto);
        if (auto it = buckets.find(1); it != buckets.end() && it->second.gps) {
            states[0].x = it->second.gps->zx;
            states[0].y = it->second.gps->zy;
        }
        for (int k = 2; k <= upto; ++k) {
            states[k - 1] = states[k - 2];
            if (auto it = buckets.find(k); it != buckets.end() && it->second.between)
                states[k - 1] = compose(states[k - 2], *it->second.between, file.layout);
        }
        if (file.layout.vel_dim == 2)
            for (int k = 0; k + 1 < upto; ++k) {
                states[k].vx = states[k + 1].x - states[k].x;
                states[k].vy = states[k + 1].y - states[k].y;
            }
        return states;
    };

    std::optional<ChainBayesTree> tree;
    std::string cost_log = "# keyframe cost\n";
    for (int k = 1; k <= n; ++k) {
        if (!tree) {
            try {
                tree = init(prefix_graph(k), dead_reckon(k));
            } catch (const SingularSystemError&) {
                continue;  // not yet observable; wait for more keyframes
            }
        } else {
            UpdateFactors add;
            if (auto it = buckets.find(k); it != buckets.end()) {
                add.gps = it->second.gps;
                add.between = it->second.between;
                add.motion = it->second.motion;
            }
            KeyframeState x_init = tree->lin_points.back();
            if (add.between)
                x_init = compose(tree->lin_points.back(), *add.between, file.layout);
            else if (add.motion) {
                x_init.x += x_init.vx * add.motion->dt;
                x_init.y += x_init.vy * add.motion->dt;
            }
            update(*tree, add, x_init);
        }
        cost_log += std::to_string(k) + ' ' + format_double(cost(tree->graph, estimate(*tree))) + '\n';
    }
    if (!tree) throw SingularSystemError("stream never becomes fully determined", n);

    atomic_write(args.out, format_trajectory_csv(states_to_trajectory(estimate(*tree), file.layout)));
    if (!args.report.empty()) atomic_write(args.report, cost_log);
    std::cout << "smoothed " << n << " keyframes\n";
    return kExitOk;
}

struct BenchArgs {
    std::string input;
    std::string layout;
    std::string grid = "1..8";
    std::string out = "bench.csv";
    double eval_cost = 1.0;
    double update_cost = 1.0;
    bool dual_lane = false;
    bool trace = false;
};

int run_bench(const BenchArgs& args) {
    std::optional<StateLayout> layout_override;
    if (!args.layout.empty()) layout_override = layout_or_die(args.layout);
    const auto graph = build_graph(read_measurement_file(args.input, layout_override));
    const auto states = initial_guess(graph);

    PipelineConfig base;
    base.eval_cycles_per_row = args.eval_cost;
    base.update_cycles_per_entry = args.update_cost;
    base.dual_lane = args.dual_lane;

    std::string csv = "mode,n_u,total_cycles,max_abar_rows,utilization\n";
    for (const auto& row : sweep(parse_grid(args.grid), graph, base)) {
        csv += row.mode == EliminationMode::Serial ? "serial," : "parallel,";
        csv += std::to_string(row.n_u) + ',' + format_double(row.total_cycles) + ',' +
               std::to_string(row.max_abar_rows) + ',' + format_double(row.utilization) + '\n';
    }
    atomic_write(args.out, csv);

    if (args.trace) {
        for (auto mode : {EliminationMode::Serial, EliminationMode::Parallel}) {
            const auto res =
                mode == EliminationMode::Serial ? eliminate_serial(graph, states) : eliminate_parallel(graph, states);
            for (const auto& t : res.trace)
                std::cout << "step " << t.stage << " mode " << (mode == EliminationMode::Serial ? "serial" : "parallel")
                          << " var " << t.index << " abar " << t.abar_rows << "x" << t.abar_cols << "\n";
        }
    }

    // Wall-clock comparison, median of 5 runs per mode.
    auto median_time = [&](auto&& fn) {
        std::vector<double> times;
        for (int run = 0; run < 5; ++run) {
            const auto start = std::chrono::steady_clock::now();
            fn();
            const auto stop = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        }
        std::sort(times.begin(), times.end());
        return times[2];
    };
    const double serial_ms = median_time([&] { back_substitute_serial(eliminate_serial(graph, states).net); });
    const double parallel_ms = median_time([&] {
        back_substitute_parallel(eliminate_parallel(graph, states, ExecPolicy::DualThread).net,
                                 ExecPolicy::DualThread);
    });
    std::cout << "wallclock_ms serial " << format_double(serial_ms) << " parallel " << format_double(parallel_ms)
              << "\n";
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string estimate;
    std::string truth;
};

int run_eval(const EvalArgs& args) {
    const auto est = read_trajectory_file(args.estimate);
    const auto truth = read_trajectory_file(args.truth);
    const auto r = rpe(est, truth);
    std::printf("rmse %.6g max_error %.6g\n", r.rmse, r.max_error);
    return kExitOk;
}

struct StorageArgs {
    std::string input;
    std::string layout;
    std::string tier = "all";
    int scalar_bytes = 8;
};

int run_storage(const StorageArgs& args) {
    std::optional<StateLayout> layout_override;
    if (!args.layout.empty()) layout_override = layout_or_die(args.layout);

    ChainFactorGraph graph;
    try {
        graph = build_graph(read_measurement_file(args.input, layout_override));
    } catch (const ParseError& e) {
        if (std::string(e.what()).find("no measurements") != std::string::npos) {
            std::cout << "tier\tbytes\tratio_vs_dense\n";  // empty graph: empty table
            return kExitOk;
        }
        throw;
    }

    std::vector<StorageTier> tiers;
    if (args.tier == "all")
        tiers = {StorageTier::Dense, StorageTier::SparseTyped, StorageTier::SequentialChain,
                 StorageTier::CompressedChain};
    else if (args.tier == "dense")
        tiers = {StorageTier::Dense};
    else if (args.tier == "step1")
        tiers = {StorageTier::SparseTyped};
    else if (args.tier == "step2")
        tiers = {StorageTier::SequentialChain};
    else if (args.tier == "step3")
        tiers = {StorageTier::CompressedChain};
    else
        throw CLI::ValidationError("--tier", "expected all|dense|step1|step2|step3");

    const double dense_bytes = static_cast<double>(footprint(graph, StorageTier::Dense, args.scalar_bytes).bytes);
    std::cout << "tier\tbytes\tratio_vs_dense\n";
    for (auto tier : tiers) {
        const auto fp = footprint(graph, tier, args.scalar_bytes);
        std::printf("%s\t%zu\t%.6g\n", tier_name(tier), fp.bytes,
                    fp.bytes > 0 ? dense_bytes / static_cast<double>(fp.bytes) : 0.0);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chain factor-graph MAP solver, incremental smoother and QR accelerator cycle model"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic measurement stream and ground truth");
    gen_cmd->add_option("--n", gen.n, "keyframe count")->required();
    gen_cmd->add_option("--layout", gen.layout, "state layout: linear|pose|full");
    gen_cmd->add_option("--noise", gen.noise, "per-sensor stddevs, e.g. gps=0.1,lidar=0.05,motion=0.02");
    gen_cmd->add_option("--seed", gen.seed, "rng seed");
    gen_cmd->add_option("--out", gen.out, "measurement file to write");
    gen_cmd->add_option("--truth", gen.truth, "ground-truth trajectory CSV to write");

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "batch Gauss-Newton solve of a measurement file");
    solve_cmd->add_option("input", solve.input, "measurement file")->required();
    solve_cmd->add_option("--mode", solve.mode, "elimination mode: serial|parallel");
    solve_cmd->add_option("--layout", solve.layout, "layout override when the file has no directive");
    solve_cmd->add_option("--out", solve.out, "estimated trajectory CSV");
    solve_cmd->add_option("--report", solve.report, "write the per-iteration report here");
    solve_cmd->add_flag("--oracle", solve.oracle, "also solve the final linearization by normal equations");

    SmoothArgs smooth;
    auto* smooth_cmd = app.add_subcommand("smooth", "incremental smoothing, one keyframe at a time");
    smooth_cmd->add_option("input", smooth.input, "measurement file (records ordered by keyframe)")->required();
    smooth_cmd->add_option("--layout", smooth.layout, "layout override");
    smooth_cmd->add_option("--out", smooth.out, "estimated trajectory CSV");
    smooth_cmd->add_option("--report", smooth.report, "write the per-keyframe cost log here");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "cycle-model sweep plus wall-clock timing of both modes");
    bench_cmd->add_option("input", bench.input, "measurement file")->required();
    bench_cmd->add_option("--layout", bench.layout, "layout override");
    bench_cmd->add_option("--nu-grid", bench.grid, "Update-unit grid, e.g. 1..8");
    bench_cmd->add_option("--out", bench.out, "sweep CSV to write");
    bench_cmd->add_option("--eval-cost", bench.eval_cost, "Evaluate cycles per active row");
    bench_cmd->add_option("--update-cost", bench.update_cost, "Update cycles per active entry");
    bench_cmd->add_flag("--dual-lane", bench.dual_lane, "model two decomposition lanes in parallel mode");
    bench_cmd->add_flag("--trace", bench.trace, "print one line per elimination step");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "relative pose error between two trajectory CSVs");
    eval_cmd->add_option("estimate", eval.estimate, "estimated trajectory CSV")->required();
    eval_cmd->add_option("truth", eval.truth, "ground-truth trajectory CSV")->required();

    StorageArgs storage;
    auto* storage_cmd = app.add_subcommand("storage", "byte footprint of the storage tiers");
    storage_cmd->add_option("input", storage.input, "measurement file")->required();
    storage_cmd->add_option("--layout", storage.layout, "layout override");
    storage_cmd->add_option("--tier", storage.tier, "all|dense|step1|step2|step3");
    storage_cmd->add_option("--scalar-bytes", storage.scalar_bytes, "4 or 8");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen);
        if (solve_cmd->parsed()) return run_solve(solve);
        if (smooth_cmd->parsed()) return run_smooth(smooth);
        if (bench_cmd->parsed()) return run_bench(bench);
        if (eval_cmd->parsed()) return run_eval(eval);
        if (storage_cmd->parsed()) return run_storage(storage);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SingularSystemError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const CovarianceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
