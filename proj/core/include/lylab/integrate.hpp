#ifndef LYLAB_INTEGRATE_HPP
#define LYLAB_INTEGRATE_HPP

#include <functional>
#include <vector>

#include "lylab/types.hpp"

namespace lylab {

struct IntegratorConfig {
    enum class Method { FixedRK4, AdaptiveRK54 };

    Method method = Method::AdaptiveRK54;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.25;
    double max_time = 1e4;  // cap for open-ended event searches
    double fixed_dt = 1e-3;
    double min_step = 1e-13;
    double divergence_bound = 1e6;

    void validate() const;
};

/// One accepted integrator step with cubic Hermite interpolation data.
struct DenseSegment {
    double t0 = 0.0, t1 = 0.0;
    VecX y0, y1, f0, f1;

    VecX eval(double t) const;
    VecX eval_derivative(double t) const;
};

using Rhs = std::function<void(double t, const VecX& y, VecX& dydt)>;
/// Return false from the step callback to stop integration early.
using StepCallback = std::function<bool(const DenseSegment&)>;

/// Integrates y' = rhs(t, y) over [t0, t1], invoking `on_step` after every
/// accepted step. Throws StepFailure when adaptive stepping underflows
/// min_step and Divergence when the state norm exceeds divergence_bound.
/// Returns the final state (at t1, or at the last accepted step if the
/// callback stopped integration).
VecX integrate_ode(const Rhs& rhs, VecX y0, double t0, double t1, const IntegratorConfig& cfg,
                   const StepCallback& on_step = {});

/// Dense trajectory of a generic ODE: segments plus node samples.
struct DensePath {
    std::vector<double> times;
    std::vector<VecX> states;
    std::vector<DenseSegment> segments;

    VecX at(double t) const;
    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }
};

DensePath integrate_dense(const Rhs& rhs, const VecX& y0, double t0, double t1,
                          const IntegratorConfig& cfg);

}  // namespace lylab

#endif
