#include "lylab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lylab {

void IntegratorConfig::validate() const {
    if (!(abs_tol > 0.0)) throw ConfigError("abs_tol must be > 0");
    if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be > 0");
    if (!(max_step > 0.0)) throw ConfigError("max_step must be > 0");
    if (!(fixed_dt > 0.0)) throw ConfigError("fixed_dt must be > 0");
}

VecX DenseSegment::eval(double t) const {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    // cubic Hermite basis
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

VecX DenseSegment::eval_derivative(double t) const {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    return d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// 4th-order weights for the embedded error estimate.
constexpr double E1 = B1 - 5179.0 / 57600;
constexpr double E3 = B3 - 7571.0 / 16695;
constexpr double E4 = B4 - 393.0 / 640;
constexpr double E5 = B5 + 92097.0 / 339200;
constexpr double E6 = B6 - 187.0 / 2100;
constexpr double E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

double error_norm(const VecX& err, const VecX& y0, const VecX& y1, double atol, double rtol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / scale;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

void check_finite(const VecX& y, double bound, double t) {
    if (!y.allFinite() || y.norm() > bound) {
        std::ostringstream os;
        os << "state diverged at t=" << t << " (norm bound " << bound << ")";
        throw Divergence(os.str());
    }
}

VecX rk4_step(const Rhs& rhs, double t, const VecX& y, double h, const VecX& f0, VecX& work) {
    VecX k2(y.size()), k3(y.size()), k4(y.size());
    rhs(t + 0.5 * h, y + 0.5 * h * f0, k2);
    rhs(t + 0.5 * h, y + 0.5 * h * k2, k3);
    rhs(t + h, y + h * k3, k4);
    work = y + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
    return work;
}

}  // namespace

VecX integrate_ode(const Rhs& rhs, VecX y0, double t0, double t1, const IntegratorConfig& cfg,
                   const StepCallback& on_step) {
    cfg.validate();
    const Eigen::Index n = y0.size();
    const double span = t1 - t0;
    if (!(span > 0.0)) throw ConfigError("integration span must be positive");

    double t = t0;
    VecX y = std::move(y0);
    VecX f(n);
    rhs(t, y, f);
    check_finite(y, cfg.divergence_bound, t);

    if (cfg.method == IntegratorConfig::Method::FixedRK4) {
        VecX ynew(n), fnew(n);
        while (t < t1) {
            const double h = std::min(cfg.fixed_dt, t1 - t);
            rk4_step(rhs, t, y, h, f, ynew);
            rhs(t + h, ynew, fnew);
            check_finite(ynew, cfg.divergence_bound, t + h);
            DenseSegment seg{t, t + h, y, ynew, f, fnew};
            t += h;
            y = ynew;
            f = fnew;
            if (on_step && !on_step(seg)) return y;
        }
        return y;
    }

    // Dormand-Prince 5(4), FSAL, PI-free elementary controller.
    double h = std::min(cfg.max_step, span / 10.0);
    VecX k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), err(n);
    while (t < t1) {
        h = std::min(h, t1 - t);
        if (h < cfg.min_step)
            throw StepFailure("adaptive step size underflow at t=" + std::to_string(t));

        rhs(t + C2 * h, y + h * (A21 * f), k2);
        rhs(t + C3 * h, y + h * (A31 * f + A32 * k2), k3);
        rhs(t + C4 * h, y + h * (A41 * f + A42 * k2 + A43 * k3), k4);
        rhs(t + C5 * h, y + h * (A51 * f + A52 * k2 + A53 * k3 + A54 * k4), k5);
        rhs(t + h, y + h * (A61 * f + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), k6);
        ynew = y + h * (B1 * f + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        rhs(t + h, ynew, k7);
        err = h * (E1 * f + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        const double en = error_norm(err, y, ynew, cfg.abs_tol, cfg.rel_tol);
        if (en <= 1.0) {
            check_finite(ynew, cfg.divergence_bound, t + h);
            DenseSegment seg{t, t + h, y, ynew, f, k7};
            t += h;
            y = ynew;
            f = k7;  // FSAL
            const bool keep_going = !on_step || on_step(seg);
            if (!keep_going) return y;
        }
        const double factor =
            (en == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = std::min(h * factor, cfg.max_step);
    }
    return y;
}

VecX DensePath::at(double t) const {
    if (segments.empty()) {
        if (!times.empty() && t == times.front()) return states.front();
        throw NumericalError("DensePath::at on empty path");
    }
    if (t <= segments.front().t0) return segments.front().eval(segments.front().t0);
    if (t >= segments.back().t1) return segments.back().eval(segments.back().t1);
    // binary search for the covering segment
    std::size_t lo = 0, hi = segments.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (segments[mid].t1 < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return segments[lo].eval(t);
}

DensePath integrate_dense(const Rhs& rhs, const VecX& y0, double t0, double t1,
                          const IntegratorConfig& cfg) {
    DensePath path;
    path.times.push_back(t0);
    path.states.push_back(y0);
    integrate_ode(rhs, y0, t0, t1, cfg, [&](const DenseSegment& seg) {
        path.times.push_back(seg.t1);
        path.states.push_back(seg.y1);
        path.segments.push_back(seg);
        return true;
    });
    return path;
}

}  // namespace lylab
