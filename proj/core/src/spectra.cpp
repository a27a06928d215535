#include "lylab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "lylab/rng.hpp"

namespace lylab {

namespace {

constexpr int kBlocks = 20;

// QR with positive R-diagonal; returns log|R_ii| and replaces m by Q.
VecX qr_renormalize(MatX& m) {
    const Eigen::HouseholderQR<MatX> qr(m);
    MatX q = qr.householderQ() * MatX::Identity(m.rows(), m.cols());
    const MatX r = qr.matrixQR().triangularView<Eigen::Upper>();
    VecX logs(m.cols());
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        const double d = r(i, i);
        if (d == 0.0) throw SingularMatrix("QR renormalization hit a zero diagonal");
        if (d < 0.0) q.col(i) = -q.col(i);
        logs[i] = std::log(std::abs(d));
    }
    m = q;
    return logs;
}

// captures by value so the returned closure outlives the call site
Rhs combined_rhs(CocycleGenerator gen, VectorFieldSpec spec, int n) {
    if (gen.kind == CocycleGenerator::Kind::Dynamical) {
        return [spec, n](double, const VecX& y, VecX& dydt) {
            Vec3 p;
            MatX m(n, n);
            unpack_state_matrix(y, p, m);
            dydt = pack_state_matrix(evaluate_field(spec, p), jacobian_field(spec, p) * m);
        };
    }
    return [gen = std::move(gen), spec, n](double, const VecX& y, VecX& dydt) {
        Vec3 p;
        MatX m(n, n);
        unpack_state_matrix(y, p, m);
        dydt = pack_state_matrix(evaluate_field(spec, p), gen.evaluate(p) * m);
    };
}

void finalize_spectrum(LyapunovSpectrum& out, const MatX& block_sums, double block_len) {
    const int d = static_cast<int>(block_sums.rows());
    const int nb = static_cast<int>(block_sums.cols());

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> totals(d);
    for (int i = 0; i < d; ++i) totals[i] = block_sums.row(i).sum() / (block_len * nb);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return totals[a] > totals[b]; });

    out.nonconvergence = false;
    for (int idx = 0; idx < d; ++idx) {
        const int i = order[idx];
        out.exponents.push_back(totals[i]);
        // batch means: per-block rates
        double mean = 0.0;
        for (int b = 0; b < nb; ++b) mean += block_sums(i, b) / block_len;
        mean /= nb;
        double var = 0.0;
        for (int b = 0; b < nb; ++b) {
            const double r = block_sums(i, b) / block_len - mean;
            var += r * r;
        }
        var /= (nb - 1);
        const double half = 2.0 * std::sqrt(var / nb);
        out.half_widths.push_back(half);

        double first = 0.0, second = 0.0;
        for (int b = 0; b < nb / 2; ++b) first += block_sums(i, b) / block_len;
        for (int b = nb / 2; b < nb; ++b) second += block_sums(i, b) / block_len;
        first /= nb / 2;
        second /= nb - nb / 2;
        if (std::abs(first - second) > 3.0 * half + 1e-300) out.nonconvergence = true;
    }
    for (int i = 0; i + 1 < d; ++i) out.gaps.push_back(out.exponents[i] - out.exponents[i + 1]);
}

}  // namespace

LyapunovSpectrum qr_lyapunov_flow(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                  const Vec3& x0, double T, double renorm_dt, double transient,
                                  const IntegratorConfig& cfg) {
    gen.validate();
    if (!(T > transient && transient > 0.0)) throw ConfigError("require T > transient > 0");
    if (!(renorm_dt > 0.0)) throw ConfigError("renorm_dt must be positive");

    const int d = gen.mat_dim();
    const Rhs rhs = combined_rhs(gen, spec, d);

    const int n_transient = std::max(1, static_cast<int>(std::ceil(transient / renorm_dt)));
    const int n_accum = std::max(kBlocks, static_cast<int>(std::ceil((T - transient) / renorm_dt)));
    const int per_block = n_accum / kBlocks;
    const int n_used = per_block * kBlocks;

    Vec3 x = x0;
    MatX q = MatX::Identity(d, d);
    double t = 0.0;

    auto advance = [&](double dt) {
        const VecX y1 = integrate_ode(rhs, pack_state_matrix(x, q), t, t + dt, cfg);
        MatX m(d, d);
        unpack_state_matrix(y1, x, m);
        q = m;
        t += dt;
    };

    for (int i = 0; i < n_transient; ++i) {
        advance(renorm_dt);
        qr_renormalize(q);
    }

    MatX block_sums = MatX::Zero(d, kBlocks);
    for (int i = 0; i < n_used; ++i) {
        advance(renorm_dt);
        block_sums.col(i / per_block) += qr_renormalize(q);
    }

    LyapunovSpectrum out;
    out.horizon = t;
    out.renorm = renorm_dt;
    finalize_spectrum(out, block_sums, per_block * renorm_dt);
    return out;
}

LyapunovSpectrum qr_lyapunov_map(const std::vector<MatX>& matrices, int renorm_every) {
    if (matrices.size() < 100) throw ConfigError("qr_lyapunov_map requires >= 100 matrices");
    if (renorm_every < 1) throw ConfigError("renorm_every must be >= 1");
    const int d = static_cast<int>(matrices.front().rows());

    const int n = static_cast<int>(matrices.size());
    // burn-in: let the QR frame align with the Oseledets flag before
    // accumulating, otherwise the O(1) misalignment cost spreads as O(1/n)
    const int burn = n / 5;
    const int per_block = (n - burn) / kBlocks;
    const int n_used = per_block * kBlocks;

    MatX q = MatX::Identity(d, d);
    MatX block_sums = MatX::Zero(d, kBlocks);
    int since_renorm = 0;
    for (int i = 0; i < burn + n_used; ++i) {
        if (matrices[i].rows() != d || matrices[i].cols() != d)
            throw DimensionMismatch("matrix list has inconsistent dimensions");
        q = matrices[i] * q;
        if (i < burn) {
            qr_renormalize(q);
            since_renorm = 0;
            continue;
        }
        if (++since_renorm >= renorm_every || i == burn + n_used - 1) {
            block_sums.col((i - burn) / per_block) += qr_renormalize(q);
            since_renorm = 0;
        }
    }

    LyapunovSpectrum out;
    out.horizon = n_used;
    out.renorm = renorm_every;
    finalize_spectrum(out, block_sums, per_block);
    return out;
}

SimplicityVerdict simplicity_verdict(const LyapunovSpectrum& spec, double gap_floor) {
    SimplicityVerdict v;
    if (spec.gaps.empty()) {
        // single exponent: trivially simple and resolved
        v.simple = true;
        v.resolved = true;
        v.min_gap = std::numeric_limits<double>::infinity();
        return v;
    }
    v.min_gap = *std::min_element(spec.gaps.begin(), spec.gaps.end());
    double worst_width = 0.0;
    for (std::size_t i = 0; i + 1 < spec.exponents.size(); ++i)
        worst_width = std::max(worst_width, spec.half_widths[i] + spec.half_widths[i + 1]);
    v.resolved = v.min_gap > 2.0 * worst_width;
    v.simple = v.resolved && v.min_gap > gap_floor;
    return v;
}

std::vector<double> exponent_relation_check(const LyapunovSpectrum& flow_spec,
                                            const LyapunovSpectrum& map_spec, double mean_tau,
                                            double floor) {
    if (flow_spec.exponents.size() != map_spec.exponents.size())
        throw DimensionMismatch("flow and map spectra have different sizes");
    std::vector<double> errors;
    for (std::size_t i = 0; i < flow_spec.exponents.size(); ++i) {
        const double expect = mean_tau * flow_spec.exponents[i];
        errors.push_back(std::abs(map_spec.exponents[i] - expect) /
                         std::max(std::abs(expect), floor));
    }
    return errors;
}

LyapunovSpectrum drop_flow_exponent(const LyapunovSpectrum& spec) {
    if (spec.exponents.empty()) throw DimensionMismatch("empty spectrum");
    std::size_t drop = 0;
    for (std::size_t i = 1; i < spec.exponents.size(); ++i)
        if (std::abs(spec.exponents[i]) < std::abs(spec.exponents[drop])) drop = i;
    LyapunovSpectrum out;
    out.horizon = spec.horizon;
    out.renorm = spec.renorm;
    out.nonconvergence = spec.nonconvergence;
    for (std::size_t i = 0; i < spec.exponents.size(); ++i) {
        if (i == drop) continue;
        out.exponents.push_back(spec.exponents[i]);
        out.half_widths.push_back(spec.half_widths[i]);
    }
    for (std::size_t i = 0; i + 1 < out.exponents.size(); ++i)
        out.gaps.push_back(out.exponents[i] - out.exponents[i + 1]);
    return out;
}

std::vector<SplittingSample> covariant_splitting(const VectorFieldSpec& spec, const Vec3& x0,
                                                 double T_forward, double T_backward,
                                                 const IntegratorConfig& cfg, int n_samples,
                                                 double sample_spacing, double step_dt) {
    if (!(T_forward > 0.0 && T_backward > 0.0))
        throw ConfigError("convergence horizons must be positive");
    const double span = (n_samples - 1) * sample_spacing;
    const int n_fwd = static_cast<int>(std::ceil(T_forward / step_dt));
    const int n_back = static_cast<int>(std::ceil(T_backward / step_dt));
    const int n_span = static_cast<int>(std::ceil(span / step_dt));
    const int n_steps = n_fwd + n_span + n_back;

    // per-step variational matrices and orbit points on a uniform grid
    std::vector<Vec3> pts(n_steps + 1);
    std::vector<Mat3> mats(n_steps);
    pts[0] = x0;
    const Rhs rhs = combined_rhs(CocycleGenerator::dynamical(), spec, 3);
    Vec3 x = x0;
    for (int k = 0; k < n_steps; ++k) {
        const VecX y1 =
            integrate_ode(rhs, pack_state_matrix(x, Mat3::Identity()), 0.0, step_dt, cfg);
        MatX m(3, 3);
        unpack_state_matrix(y1, x, m);
        pts[k + 1] = x;
        mats[k] = m;
    }

    // forward pass: leading column tracks the unstable direction
    std::vector<Vec3> e_u(n_steps + 1, Vec3::Zero());
    {
        auto rng = make_rng(0x1f0c5u);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MatX q = MatX::NullaryExpr(3, 3, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        qr_renormalize(q);
        for (int k = 0; k < n_steps; ++k) {
            q = mats[k] * q;
            qr_renormalize(q);
            e_u[k + 1] = q.col(0);
        }
    }

    // backward pass with inverse matrices: leading column tracks the stable direction
    std::vector<Vec3> e_s(n_steps + 1, Vec3::Zero());
    {
        auto rng = make_rng(0xba5eu);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MatX q = MatX::NullaryExpr(3, 3, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        qr_renormalize(q);
        for (int k = n_steps; k > 0; --k) {
            q = mats[k - 1].inverse() * q;
            qr_renormalize(q);
            e_s[k - 1] = q.col(0);
        }
    }

    std::vector<SplittingSample> out;
    for (int s = 0; s < n_samples; ++s) {
        const int k = n_fwd + static_cast<int>(std::round(s * sample_spacing / step_dt));
        if (k > n_steps - n_back) break;
        SplittingSample smp;
        smp.t = k * step_dt;
        smp.point = pts[k];
        smp.e_u = e_u[k];
        smp.e_s = e_s[k];
        const Vec3 f = evaluate_field(spec, pts[k]);
        smp.ok = f.norm() > 1e-12;
        smp.e_flow = smp.ok ? Vec3(f.normalized()) : Vec3::UnitY();
        out.push_back(smp);
    }
    return out;
}

SingularHyperbolicityReport check_singular_hyperbolicity(
    const std::vector<SplittingSample>& samples, const VectorFieldSpec& spec,
    const std::vector<double>& t_grid, double theta, const IntegratorConfig& cfg) {
    if (samples.empty()) throw InsufficientSamples("no splitting samples");
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");

    SingularHyperbolicityReport rep;
    rep.theta = theta;
    int pass_dom = 0, pass_con = 0, pass_vol = 0, pass_all = 0;
    double worst_dom = -1e300, worst_con = -1e300, worst_vol = -1e300;
    double theta_needed = 0.0, literal_max = 0.0;
    const Rhs rhs = combined_rhs(CocycleGenerator::dynamical(), spec, 3);

    for (const auto& s : samples) {
        if (!s.ok) continue;
        // orthonormal basis of E^cu = span(e_flow, e_u)
        const Vec3 q1 = s.e_flow.normalized();
        Vec3 q2 = s.e_u - s.e_u.dot(q1) * q1;
        if (q2.norm() < 1e-10) continue;
        q2.normalize();

        for (double t : t_grid) {
            const VecX y1 =
                integrate_ode(rhs, pack_state_matrix(s.point, Mat3::Identity()), 0.0, t, cfg);
            Vec3 xt;
            MatX m(3, 3);
            unpack_state_matrix(y1, xt, m);

            const double rate_s = (m * s.e_s.normalized()).norm();
            Eigen::Matrix<double, 3, 2> basis;
            basis.col(0) = q1;
            basis.col(1) = q2;
            const Eigen::Matrix<double, 3, 2> b = m * basis;
            const Eigen::JacobiSVD<MatX> svd(b);
            const double smax = svd.singularValues()(0);
            const double smin = svd.singularValues()(1);
            const double det_cu = smax * smin;

            const double theta_t = std::pow(theta, t);
            const bool dom = rate_s / smin <= theta_t;
            const bool con = rate_s < theta_t;
            const bool vol = det_cu >= std::exp(-theta * t);
            if (dom) ++pass_dom;
            if (con) ++pass_con;
            if (vol) ++pass_vol;
            if (dom && con && vol) ++pass_all;
            worst_dom = std::max(worst_dom, std::log(rate_s / smin) - t * std::log(theta));
            worst_con = std::max(worst_con, std::log(rate_s) - t * std::log(theta));
            worst_vol = std::max(worst_vol, -theta * t - std::log(det_cu));
            literal_max = std::max(literal_max, rate_s * smax);

            // smallest theta in (0,1) satisfying all three at this sample
            double need = std::max(std::pow(rate_s, 1.0 / t), std::pow(rate_s / smin, 1.0 / t));
            if (det_cu < 1.0) need = std::max(need, -std::log(det_cu) / t);
            theta_needed = std::max(theta_needed, need);
            ++rep.n_checks;
        }
    }
    if (rep.n_checks == 0) throw InsufficientSamples("no usable splitting samples");

    rep.pass_fraction_domination = static_cast<double>(pass_dom) / rep.n_checks;
    rep.pass_fraction_contraction = static_cast<double>(pass_con) / rep.n_checks;
    rep.pass_fraction_volume = static_cast<double>(pass_vol) / rep.n_checks;
    rep.pass_fraction_all = static_cast<double>(pass_all) / rep.n_checks;
    rep.worst_domination_margin = worst_dom;
    rep.worst_contraction_margin = worst_con;
    rep.worst_volume_margin = worst_vol;
    rep.theta_min_certified = theta_needed;
    rep.literal_domination_max = literal_max;
    return rep;
}

}  // namespace lylab
