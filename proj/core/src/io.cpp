#include "chainfg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chainfg/errors.hpp"

namespace chainfg {

namespace {

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, int line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("not a number: '" + tok + "'", line);
    }
    if (pos != tok.size()) throw ParseError("not a number: '" + tok + "'", line);
    return v;
}

int parse_index(const std::string& tok, int line) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("not an index: '" + tok + "'", line);
    }
    if (pos != tok.size() || v < 1) throw ParseError("index must be a positive integer: '" + tok + "'", line);
    return v;
}

Mat sigma_from_upper(const std::vector<double>& vals, int dim) {
    Mat sigma(dim, dim);
    int at = 0;
    for (int r = 0; r < dim; ++r)
        for (int c = r; c < dim; ++c) {
            sigma(r, c) = vals[at];
            sigma(c, r) = vals[at];
            ++at;
        }
    return sigma;
}

void append_upper(std::string& out, const Mat& sigma) {
    for (int r = 0; r < sigma.rows; ++r)
        for (int c = r; c < sigma.cols; ++c) {
            out += ' ';
            out += format_double(sigma(r, c));
        }
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* layout_name(const StateLayout& layout) {
    if (layout == StateLayout::linear_mode()) return "linear";
    if (layout == StateLayout::pose_mode()) return "pose";
    if (layout == StateLayout::full_mode()) return "full";
    throw std::invalid_argument("layout has no file name");
}

std::optional<StateLayout> layout_from_name(const std::string& name) {
    if (name == "linear") return StateLayout::linear_mode();
    if (name == "pose") return StateLayout::pose_mode();
    if (name == "full") return StateLayout::full_mode();
    return std::nullopt;
}

MeasurementFile parse_measurements(std::istream& in, std::optional<StateLayout> layout_override) {
    MeasurementFile file;
    std::optional<StateLayout> layout = layout_override;
    bool directive_seen = false;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        auto toks = tokenize(raw);
        if (toks.empty()) continue;

        if (toks[0] == "LAYOUT") {
            if (directive_seen) throw ParseError("duplicate LAYOUT directive", line_no);
            if (toks.size() != 2) throw ParseError("LAYOUT needs one argument", line_no);
            auto named = layout_from_name(toks[1]);
            if (!named) throw ParseError("unknown layout '" + toks[1] + "'", line_no);
            if (layout_override && !(*named == *layout_override))
                throw ParseError("LAYOUT directive conflicts with requested layout", line_no);
            layout = *named;
            directive_seen = true;
            continue;
        }
        if (!layout)
            throw ParseError("state layout unknown; add a LAYOUT directive or pass --layout", line_no);

        auto bar = std::find(toks.begin(), toks.end(), "|");
        if (bar == toks.end()) throw ParseError("missing '|' before covariance entries", line_no);
        std::vector<std::string> head(toks.begin(), bar);
        std::vector<double> sig;
        for (auto it = bar + 1; it != toks.end(); ++it) sig.push_back(parse_double(*it, line_no));

        auto need_sigma = [&](int dim) {
            const int want = dim * (dim + 1) / 2;
            if (static_cast<int>(sig.size()) != want)
                throw ParseError("expected " + std::to_string(want) + " covariance entries, got " +
                                     std::to_string(sig.size()),
                                 line_no);
            return sigma_from_upper(sig, dim);
        };

        MeasurementRecord rec;
        rec.line = line_no;
        if (head[0] == "GPS") {
            if (head.size() != 4) throw ParseError("GPS needs: index zx zy", line_no);
            GpsFactor f;
            f.index = parse_index(head[1], line_no);
            f.zx = parse_double(head[2], line_no);
            f.zy = parse_double(head[3], line_no);
            f.sigma = need_sigma(2);
            rec.factor = f;
        } else if (head[0] == "BETWEEN") {
            const bool pose = layout->has_theta();
            if (head.size() != (pose ? 5u : 4u))
                throw ParseError(pose ? "BETWEEN needs: index dx dy dtheta" : "BETWEEN needs: index dx dy", line_no);
            BetweenFactor f;
            f.index = parse_index(head[1], line_no);
            f.dx = parse_double(head[2], line_no);
            f.dy = parse_double(head[3], line_no);
            if (pose) f.dtheta = wrap_angle(parse_double(head[4], line_no));
            f.sigma = need_sigma(pose ? 3 : 2);
            rec.factor = f;
        } else if (head[0] == "MOTION") {
            if (head.size() != 3) throw ParseError("MOTION needs: index dt", line_no);
            if (layout->vel_dim != 2) throw ParseError("MOTION record requires a velocity layout", line_no);
            MotionFactor f;
            f.index = parse_index(head[1], line_no);
            f.dt = parse_double(head[2], line_no);
            f.sigma = need_sigma(4 + layout->bias_dim);
            rec.factor = f;
        } else {
            throw ParseError("unknown record type '" + head[0] + "'", line_no);
        }
        file.records.push_back(std::move(rec));
    }

    if (!layout) throw ParseError("no measurements", line_no == 0 ? 1 : line_no);
    file.layout = *layout;
    if (file.records.empty()) throw ParseError("no measurements", line_no == 0 ? 1 : line_no);
    return file;
}

MeasurementFile read_measurement_file(const std::filesystem::path& path,
                                      std::optional<StateLayout> layout_override) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_measurements(in, layout_override);
}

ChainFactorGraph build_graph(const MeasurementFile& file) {
    ChainFactorGraph g;
    g.layout = file.layout;
    for (const auto& rec : file.records) {
        if (const auto* f = std::get_if<GpsFactor>(&rec.factor)) {
            if (!g.gps.emplace(f->index, *f).second) throw ParseError("duplicate GPS record", rec.line);
            g.n = std::max(g.n, f->index);
        } else if (const auto* f = std::get_if<BetweenFactor>(&rec.factor)) {
            if (!g.between.emplace(f->index, *f).second) throw ParseError("duplicate BETWEEN record", rec.line);
            g.n = std::max(g.n, f->index + 1);
        } else if (const auto* f = std::get_if<MotionFactor>(&rec.factor)) {
            if (!g.motion.emplace(f->index, *f).second) throw ParseError("duplicate MOTION record", rec.line);
            g.n = std::max(g.n, f->index + 1);
        }
    }
    return g;
}

std::string format_measurements(const ChainFactorGraph& graph) {
    std::string out = "LAYOUT ";
    out += layout_name(graph.layout);
    out += '\n';
    for (int i = 1; i <= graph.n; ++i) {
        if (auto it = graph.gps.find(i); it != graph.gps.end()) {
            out += "GPS " + std::to_string(i) + ' ' + format_double(it->second.zx) + ' ' +
                   format_double(it->second.zy) + " |";
            append_upper(out, it->second.sigma);
            out += '\n';
        }
        if (auto it = graph.between.find(i); it != graph.between.end()) {
            out += "BETWEEN " + std::to_string(i) + ' ' + format_double(it->second.dx) + ' ' +
                   format_double(it->second.dy);
            if (graph.layout.has_theta()) out += ' ' + format_double(it->second.dtheta);
            out += " |";
            append_upper(out, it->second.sigma);
            out += '\n';
        }
        if (auto it = graph.motion.find(i); it != graph.motion.end()) {
            out += "MOTION " + std::to_string(i) + ' ' + format_double(it->second.dt) + " |";
            append_upper(out, it->second.sigma);
            out += '\n';
        }
    }
    return out;
}

Trajectory states_to_trajectory(const StateVec& states, const StateLayout& layout) {
    Trajectory t;
    t.layout = layout;
    for (std::size_t i = 0; i < states.size(); ++i) t.points.push_back({static_cast<int>(i) + 1, states[i]});
    return t;
}

StateVec trajectory_to_states(const Trajectory& trajectory) {
    StateVec out;
    out.reserve(trajectory.points.size());
    for (const auto& p : trajectory.points) out.push_back(p.state);
    return out;
}

std::string format_trajectory_csv(const Trajectory& t) {
    std::string out = "index,x,y,theta";
    if (t.layout.vel_dim == 2) out += ",vx,vy";
    if (t.layout.bias_dim == 1) out += ",bias";
    out += '\n';
    for (const auto& p : t.points) {
        out += std::to_string(p.index);
        out += ',' + format_double(p.state.x) + ',' + format_double(p.state.y) + ',' + format_double(p.state.theta);
        if (t.layout.vel_dim == 2) out += ',' + format_double(p.state.vx) + ',' + format_double(p.state.vy);
        if (t.layout.bias_dim == 1) out += ',' + format_double(p.state.bias);
        out += '\n';
    }
    return out;
}

Trajectory parse_trajectory_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("missing header", 1);

    Trajectory t;
    if (header == "index,x,y,theta")
        t.layout = StateLayout::pose_mode();
    else if (header == "index,x,y,theta,vx,vy")
        t.layout = StateLayout{3, 2, 0};
    else if (header == "index,x,y,theta,vx,vy,bias")
        t.layout = StateLayout::full_mode();
    else
        throw ParseError("unrecognized header '" + header + "'", 1);

    const int want = 4 + t.layout.vel_dim + t.layout.bias_dim;
    std::string raw;
    int line_no = 1;
    int last_index = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.empty()) continue;
        std::vector<double> vals;
        std::size_t start = 0;
        while (start <= raw.size()) {
            auto comma = raw.find(',', start);
            const std::string tok = raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            vals.push_back(parse_double(tok, line_no));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (static_cast<int>(vals.size()) != want)
            throw ParseError("expected " + std::to_string(want) + " columns", line_no);
        TrajectoryPoint p;
        p.index = static_cast<int>(vals[0]);
        if (p.index <= last_index) throw ParseError("indices must be strictly increasing", line_no);
        last_index = p.index;
        p.state.x = vals[1];
        p.state.y = vals[2];
        p.state.theta = vals[3];
        if (t.layout.vel_dim == 2) {
            p.state.vx = vals[4];
            p.state.vy = vals[5];
        }
        if (t.layout.bias_dim == 1) p.state.bias = vals[6];
        t.points.push_back(p);
    }
    return t;
}

Trajectory read_trajectory_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_trajectory_csv(in);
}

std::string format_solve_report(const SolveReport& report) {
    std::string out = "# iteration cost delta_inf\n";
    for (int it = 1; it <= report.iterations; ++it) {
        const auto ci = static_cast<std::size_t>(it) < report.cost_history.size()
                            ? static_cast<std::size_t>(it)
                            : report.cost_history.size() - 1;
        out += std::to_string(it) + ' ' + format_double(report.cost_history[ci]) + ' ' +
               format_double(report.delta_norm_history[static_cast<std::size_t>(it) - 1]) + '\n';
    }
    out += std::string("# converged ") + (report.converged ? "yes" : "no") + " final_cost " +
           format_double(report.final_cost) + '\n';
    return out;
}

namespace {

void atomic_write_impl(const std::filesystem::path& path, const char* data, std::size_t size) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(data, static_cast<std::streamsize>(size));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    atomic_write_impl(path, content.data(), content.size());
}

void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    atomic_write_impl(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace chainfg
