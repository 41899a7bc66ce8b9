#include "chainfg/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace chainfg {

namespace {

Mat iso_sigma(double stddev, int dim) {
    Mat sigma(dim, dim);
    const double var = stddev > 0.0 ? stddev * stddev : 1.0;
    for (int i = 0; i < dim; ++i) sigma(i, i) = var;
    return sigma;
}

}  // namespace

SynthDataset generate_dataset(int n, const StateLayout& layout, const NoiseSpec& noise, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
    if (noise.gps < 0.0 || noise.lidar < 0.0 || noise.motion < 0.0)
        throw std::invalid_argument("generate_dataset: noise stddevs must be >= 0");

    const double dt = 1.0;
    StateVec truth(n);
    for (int i = 0; i < n; ++i) {
        const double heading = 0.8 * std::sin(0.3 * i);
        if (i == 0) {
            truth[0].x = 0.0;
            truth[0].y = 0.0;
        } else {
            const double prev_heading = 0.8 * std::sin(0.3 * (i - 1));
            truth[i].x = truth[i - 1].x + std::cos(prev_heading);
            truth[i].y = truth[i - 1].y + std::sin(prev_heading);
        }
        if (layout.has_theta()) truth[i].theta = wrap_angle(heading);
    }
    if (layout.vel_dim == 2) {
        for (int i = 0; i + 1 < n; ++i) {
            truth[i].vx = (truth[i + 1].x - truth[i].x) / dt;
            truth[i].vy = (truth[i + 1].y - truth[i].y) / dt;
        }
        if (n >= 2) {
            truth[n - 1].vx = truth[n - 2].vx;
            truth[n - 1].vy = truth[n - 2].vy;
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](double stddev) { return stddev > 0.0 ? stddev * gauss(rng) : 0.0; };

    SynthDataset out;
    out.graph.layout = layout;
    out.graph.n = n;

    for (int i = 1; i <= n; ++i) {
        GpsFactor g;
        g.index = i;
        g.zx = truth[i - 1].x + draw(noise.gps);
        g.zy = truth[i - 1].y + draw(noise.gps);
        g.sigma = iso_sigma(noise.gps, 2);
        out.graph.gps[i] = g;
    }
    for (int i = 1; i < n; ++i) {
        const auto& a = truth[i - 1];
        const auto& b = truth[i];
        BetweenFactor f;
        f.index = i;
        if (layout.has_theta()) {
            const double c = std::cos(a.theta), s = std::sin(a.theta);
            f.dx = c * (b.x - a.x) + s * (b.y - a.y) + draw(noise.lidar);
            f.dy = -s * (b.x - a.x) + c * (b.y - a.y) + draw(noise.lidar);
            f.dtheta = wrap_angle(b.theta - a.theta + draw(noise.lidar));
            f.sigma = iso_sigma(noise.lidar, 3);
        } else {
            f.dx = b.x - a.x + draw(noise.lidar);
            f.dy = b.y - a.y + draw(noise.lidar);
            f.sigma = iso_sigma(noise.lidar, 2);
        }
        out.graph.between[i] = f;

        if (layout.vel_dim == 2) {
            MotionFactor m;
            m.index = i;
            m.dt = dt;
            m.sigma = iso_sigma(noise.motion, 4 + layout.bias_dim);
            out.graph.motion[i] = m;
        }
    }

    out.truth.layout = layout;
    for (int i = 0; i < n; ++i) out.truth.points.push_back({i + 1, truth[i]});
    return out;
}

}  // namespace chainfg
