#include "lylab/flows.hpp"

#include <algorithm>
#include <cmath>

namespace lylab {

VectorFieldSpec VectorFieldSpec::lorenz(double sigma, double r, double b) {
    VectorFieldSpec s;
    s.kind = Kind::Lorenz;
    s.sigma = sigma;
    s.r = r;
    s.b = b;
    return s;
}

VectorFieldSpec VectorFieldSpec::linear_singularity(double alpha_ss, double alpha_s,
                                                    double alpha_u) {
    VectorFieldSpec s;
    s.kind = Kind::LinearSingularity;
    s.alpha_ss = alpha_ss;
    s.alpha_s = alpha_s;
    s.alpha_u = alpha_u;
    return s;
}

void VectorFieldSpec::validate() const {
    if (kind == Kind::LinearSingularity) {
        if (!(alpha_ss < 0.0) || !(alpha_s < 0.0) || !(alpha_u > 0.0))
            throw ConfigError("LinearSingularity requires alpha_ss < 0, alpha_s < 0, alpha_u > 0");
    }
}

Vec3 evaluate_field(const VectorFieldSpec& spec, const Vec3& p) {
    if (spec.kind == VectorFieldSpec::Kind::Lorenz) {
        return {spec.sigma * (p.y() - p.x()),
                spec.r * p.x() - p.y() - p.x() * p.z(),
                p.x() * p.y() - spec.b * p.z()};
    }
    // stable axes x and z, unstable axis y
    return {spec.alpha_ss * p.x(), spec.alpha_u * p.y(), spec.alpha_s * p.z()};
}

Mat3 jacobian_field(const VectorFieldSpec& spec, const Vec3& p) {
    Mat3 j;
    if (spec.kind == VectorFieldSpec::Kind::Lorenz) {
        j << -spec.sigma, spec.sigma, 0.0,
             spec.r - p.z(), -1.0, -p.x(),
             p.y(), p.x(), -spec.b;
    } else {
        j.setZero();
        j(0, 0) = spec.alpha_ss;
        j(1, 1) = spec.alpha_u;
        j(2, 2) = spec.alpha_s;
    }
    return j;
}

Vec3 Trajectory::at(double t) const {
    if (dense_segments.empty()) {
        if (!times.empty() && t == times.front()) return points.front();
        throw NumericalError("Trajectory::at without dense output");
    }
    const auto& segs = dense_segments;
    if (t <= segs.front().t0) return Vec3(segs.front().y0.head<3>());
    if (t >= segs.back().t1) return Vec3(segs.back().y1.head<3>());
    std::size_t lo = 0, hi = segs.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (segs[mid].t1 < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return Vec3(segs[lo].eval(t).head<3>());
}

Trajectory integrate_flow(const VectorFieldSpec& spec, const Vec3& x0, double T,
                          const IntegratorConfig& cfg) {
    spec.validate();
    if (!(T > 0.0)) throw ConfigError("integration horizon T must be positive");
    if (!x0.allFinite()) throw ConfigError("initial condition must be finite");

    Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
        const Vec3 f = evaluate_field(spec, Vec3(y.head<3>()));
        dydt = f;
    };

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.points.push_back(x0);
    integrate_ode(rhs, VecX(x0), 0.0, T, cfg, [&](const DenseSegment& seg) {
        traj.times.push_back(seg.t1);
        traj.points.push_back(Vec3(seg.y1.head<3>()));
        traj.dense_segments.push_back(seg);
        return true;
    });
    return traj;
}

VecX pack_state_matrix(const Vec3& x, const MatX& m) {
    VecX y(3 + m.size());
    y.head<3>() = x;
    Eigen::Index k = 3;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) y[k++] = m(i, j);
    return y;
}

void unpack_state_matrix(const VecX& y, Vec3& x, MatX& m) {
    x = y.head<3>();
    Eigen::Index k = 3;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = y[k++];
}

VariationalResult integrate_variational(const VectorFieldSpec& spec, const Vec3& x0, double T,
                                        const IntegratorConfig& cfg) {
    spec.validate();
    if (!(T > 0.0)) throw ConfigError("integration horizon T must be positive");

    Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
        Vec3 x;
        MatX m(3, 3);
        unpack_state_matrix(y, x, m);
        const Vec3 f = evaluate_field(spec, x);
        const Mat3 j = jacobian_field(spec, x);
        dydt = pack_state_matrix(f, j * m);
    };

    VariationalResult out;
    out.trajectory.times.push_back(0.0);
    out.trajectory.points.push_back(x0);
    out.matrix_path.push_back(Mat3::Identity());

    const VecX y0 = pack_state_matrix(x0, Mat3::Identity());
    integrate_ode(rhs, y0, 0.0, T, cfg, [&](const DenseSegment& seg) {
        Vec3 x;
        MatX m(3, 3);
        unpack_state_matrix(seg.y1, x, m);
        out.trajectory.times.push_back(seg.t1);
        out.trajectory.points.push_back(x);
        out.trajectory.dense_segments.push_back(seg);
        out.matrix_path.push_back(Mat3(m));
        return true;
    });
    return out;
}

SingularityEigen singularity_eigen(const VectorFieldSpec& spec) {
    spec.validate();
    const Mat3 j = jacobian_field(spec, Vec3::Zero());
    const Eigen::EigenSolver<Mat3> es(j);
    const auto vals = es.eigenvalues();
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    for (int i = 0; i < 3; ++i) {
        if (std::abs(vals[i].imag()) > 1e-10 * scale)
            throw ComplexSpectrum("singularity eigenvalues are not all real");
    }
    Vec3 ev(vals[0].real(), vals[1].real(), vals[2].real());
    std::sort(ev.data(), ev.data() + 3);

    SingularityEigen out;
    out.eigenvalues = ev;
    const double a_ss = ev[0], a_s = ev[1], a_u = ev[2];
    out.eq_ordering_ok = (a_ss < a_s) && (a_s < 0.0) && (0.0 < -a_s) && (-a_s < a_u);
    return out;
}

}  // namespace lylab
