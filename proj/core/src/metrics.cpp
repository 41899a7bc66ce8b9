#include "chainfg/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace chainfg {

RpeResult rpe(const Trajectory& estimate, const Trajectory& truth) {
    const std::size_t n = truth.points.size();
    if (estimate.points.size() != n) throw std::invalid_argument("rpe: trajectory length mismatch");
    if (n < 2) throw std::invalid_argument("rpe: need at least two keyframes");
    for (std::size_t i = 0; i < n; ++i)
        if (estimate.points[i].index != truth.points[i].index)
            throw std::invalid_argument("rpe: keyframe index mismatch");

    const bool rotate = truth.layout.has_theta();
    double sum_sq = 0.0;
    double max_err = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& e0 = estimate.points[i].state;
        const auto& e1 = estimate.points[i + 1].state;
        const auto& t0 = truth.points[i].state;
        const auto& t1 = truth.points[i + 1].state;

        double ex = e1.x - e0.x, ey = e1.y - e0.y;
        double tx = t1.x - t0.x, ty = t1.y - t0.y;
        if (rotate) {
            const double c = std::cos(t0.theta), s = std::sin(t0.theta);
            const double rex = c * ex + s * ey, rey = -s * ex + c * ey;
            const double rtx = c * tx + s * ty, rty = -s * tx + c * ty;
            ex = rex;
            ey = rey;
            tx = rtx;
            ty = rty;
        }
        const double err = std::hypot(ex - tx, ey - ty);
        sum_sq += err * err;
        max_err = std::max(max_err, err);
    }
    return {std::sqrt(sum_sq / static_cast<double>(n - 1)), max_err};
}

}  // namespace chainfg
