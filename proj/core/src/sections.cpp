#include "lylab/sections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace lylab {

namespace {

double event_value(const CrossSection& sec, const VecX& y) {
    return (Vec3(y.head<3>()) - sec.base).dot(sec.normal);
}

// Bisects the Hermite interpolant of one segment for the event root.
double bisect_root(const DenseSegment& seg, const CrossSection& sec, double ta, double tb) {
    double ga = event_value(sec, seg.eval(ta));
    while (tb - ta > 1e-10) {
        const double tm = 0.5 * (ta + tb);
        const double gm = event_value(sec, seg.eval(tm));
        if ((ga <= 0.0) == (gm <= 0.0)) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
        }
    }
    return 0.5 * (ta + tb);
}

}  // namespace

CrossSection CrossSection::make(const VectorFieldSpec& spec, const Vec3& base, const Vec3& normal,
                                const Vec3& u1_hint, const SectionBounds& bounds, int direction,
                                double gamma_center, double gamma_band_halfwidth) {
    CrossSection sec;
    sec.base = base;
    sec.normal = normal.normalized();
    Vec3 u1 = u1_hint - u1_hint.dot(sec.normal) * sec.normal;
    if (u1.norm() < 1e-12) throw ConfigError("u1 hint parallel to section normal");
    sec.u1 = u1.normalized();
    sec.u2 = sec.normal.cross(sec.u1);
    sec.bounds = bounds;
    sec.direction = direction;
    sec.gamma_center = gamma_center;
    sec.gamma_band_halfwidth = gamma_band_halfwidth;

    // transversality grid check
    constexpr int kGrid = 17;
    int pos = 0, neg = 0;
    for (int i = 0; i < kGrid; ++i) {
        for (int j = 0; j < kGrid; ++j) {
            const double a = bounds.u1_min + (bounds.u1_max - bounds.u1_min) * i / (kGrid - 1);
            const double b = bounds.u2_min + (bounds.u2_max - bounds.u2_min) * j / (kGrid - 1);
            const double g = evaluate_field(spec, sec.embed({a, b})).dot(sec.normal);
            if (g > 0.0)
                ++pos;
            else if (g < 0.0)
                ++neg;
        }
    }
    sec.uniform_crossing = (pos == 0) || (neg == 0);
    return sec;
}

CrossSection CrossSection::lorenz_classic(const VectorFieldSpec& spec) {
    SectionBounds b{-20.0, 20.0, -25.0, 25.0};
    return make(spec, Vec3(0.0, 0.0, spec.r - 1.0), Vec3::UnitZ(), Vec3::UnitX(), b,
                /*direction=*/-1, /*gamma_center=*/0.0, /*gamma_band_halfwidth=*/1e-4);
}

std::vector<Crossing> detect_crossing(const Trajectory& traj, const CrossSection& sec,
                                      int direction) {
    std::vector<Crossing> out;
    for (const auto& seg : traj.dense_segments) {
        const double g0 = event_value(sec, seg.y0);
        const double g1 = event_value(sec, seg.y1);
        if (g0 == 0.0 || (g0 < 0.0) == (g1 < 0.0)) continue;
        const double t_star = bisect_root(seg, sec, seg.t0, seg.t1);
        const VecX y_star = seg.eval(t_star);
        const Vec3 p(y_star.head<3>());
        // crossing speed determines direction and grazing
        const double dg = seg.eval_derivative(t_star).head<3>().dot(sec.normal);
        if (direction != 0 && dg * direction < 0.0) continue;
        Crossing c;
        c.t = t_star;
        c.p = p;
        c.grazing = std::abs(dg) < 1e-12;
        out.push_back(c);
    }
    return out;
}

Mat2 return_derivative(const VectorFieldSpec& spec, const CrossSection& sec,
                       const Vec2& return_point, const Mat3& dx_tau) {
    const Vec3 q = sec.embed(return_point);
    const Vec3 v = evaluate_field(spec, q);
    const double vn = v.dot(sec.normal);
    if (std::abs(vn) < 1e-8 * v.norm())
        throw DegenerateProjection("flow direction nearly tangent to section at return point");

    Mat2 d;
    const Vec3 cols[2] = {sec.u1, sec.u2};
    for (int i = 0; i < 2; ++i) {
        const Vec3 w = dx_tau * cols[i];
        // project along the flow direction onto the section plane
        const Vec3 w_plane = w - v * (w.dot(sec.normal) / vn);
        d(0, i) = w_plane.dot(sec.u1);
        d(1, i) = w_plane.dot(sec.u2);
    }
    return d;
}

ReturnSample poincare_return(const VectorFieldSpec& spec, const CrossSection& sec, const Vec2& x,
                             const IntegratorConfig& cfg, double tau_min, double tau_max) {
    if (!sec.bounds.contains(x) || sec.in_gamma_band(x))
        throw OutsideSection("start point outside section bounds or inside Gamma band");

    ReturnSample sample;
    sample.x = x;

    Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
        Vec3 p;
        MatX m(3, 3);
        unpack_state_matrix(y, p, m);
        dydt = pack_state_matrix(evaluate_field(spec, p), jacobian_field(spec, p) * m);
    };

    const VecX y_start = pack_state_matrix(sec.embed(x), Mat3::Identity());

    double t_hit = -1.0;
    bool grazing = false;
    double seg_start_t = 0.0;
    VecX seg_start_y = y_start;

    integrate_ode(rhs, y_start, 0.0, tau_max, cfg, [&](const DenseSegment& seg) {
        const double g0 = event_value(sec, seg.y0);
        const double g1 = event_value(sec, seg.y1);
        if (g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0)) {
            const double t_star = bisect_root(seg, sec, seg.t0, seg.t1);
            if (t_star >= tau_min) {
                const double dg = seg.eval_derivative(t_star).head<3>().dot(sec.normal);
                if (sec.direction == 0 || dg * sec.direction > 0.0) {
                    t_hit = t_star;
                    grazing = std::abs(dg) < 1e-12;
                    seg_start_t = seg.t0;
                    seg_start_y = seg.y0;
                    return false;
                }
            }
        }
        return true;
    });

    if (t_hit < 0.0) {
        sample.censored = true;
        sample.tau = tau_max;
        return sample;
    }

    // re-integrate the partial step to land exactly on the crossing time
    VecX y_hit = seg_start_y;
    if (t_hit > seg_start_t) y_hit = integrate_ode(rhs, seg_start_y, seg_start_t, t_hit, cfg);

    Vec3 p_hit;
    MatX m_hit(3, 3);
    unpack_state_matrix(y_hit, p_hit, m_hit);

    sample.tau = t_hit;
    sample.fx = sec.project(p_hit);
    sample.censored = grazing || !sec.bounds.contains(sample.fx) || sec.in_gamma_band(sample.fx);
    if (!sample.censored) sample.d_return = return_derivative(spec, sec, sample.fx, Mat3(m_hit));
    return sample;
}

std::vector<ReturnSample> sample_returns(const VectorFieldSpec& spec, const CrossSection& sec,
                                         const Vec2& x0, int n_returns,
                                         const IntegratorConfig& cfg, double tau_min,
                                         double tau_max) {
    std::vector<ReturnSample> out;
    Vec2 x = x0;
    for (int i = 0; i < n_returns; ++i) {
        ReturnSample s = poincare_return(spec, sec, x, cfg, tau_min, tau_max);
        out.push_back(s);
        if (s.censored) break;
        x = s.fx;
    }
    return out;
}

Vec2 project_direction_to_section(const CrossSection& sec, const Vec3& dir, const Vec3& flow_dir) {
    const double vn = flow_dir.dot(sec.normal);
    Vec3 w = dir;
    if (std::abs(vn) > 1e-12) w = dir - flow_dir * (dir.dot(sec.normal) / vn);
    Vec2 u{w.dot(sec.u1), w.dot(sec.u2)};
    const double n = u.norm();
    if (n < 1e-14) throw DegenerateProjection("direction collapses under section projection");
    return u / n;
}

HyperbolicityReport hyperbolicity_report(const std::vector<ReturnSample>& samples,
                                         const std::vector<SectionDirections>& dirs,
                                         double theta) {
    if (samples.size() != dirs.size())
        throw DimensionMismatch("samples/directions length mismatch");

    std::vector<double> contr, expan, taus;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].censored) continue;
        contr.push_back((samples[i].d_return * dirs[i].es_x.normalized()).norm());
        expan.push_back((samples[i].d_return * dirs[i].eu_x.normalized()).norm());
        taus.push_back(samples[i].tau);
    }
    if (contr.size() < 10)
        throw InsufficientSamples("hyperbolicity_report needs >= 10 non-censored samples");

    HyperbolicityReport rep;
    rep.n_used = static_cast<int>(contr.size());
    rep.theta = theta;
    int n_c = 0, n_e = 0;
    double worst_c = -1e300, worst_e = -1e300;
    for (std::size_t i = 0; i < contr.size(); ++i) {
        if (contr[i] < theta) ++n_c;
        if (expan[i] > 1.0 / theta) ++n_e;
        worst_c = std::max(worst_c, std::log(contr[i] / theta));
        worst_e = std::max(worst_e, std::log(1.0 / (theta * expan[i])));
    }
    rep.frac_contracting = static_cast<double>(n_c) / rep.n_used;
    rep.frac_expanding = static_cast<double>(n_e) / rep.n_used;
    rep.worst_contract_margin = worst_c;
    rep.worst_expand_margin = worst_e;

    // theta_fit = exp(slope) of log(contraction rate) against tau
    double mt = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < contr.size(); ++i) {
        mt += taus[i];
        ml += std::log(contr[i]);
    }
    mt /= contr.size();
    ml /= contr.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < contr.size(); ++i) {
        num += (taus[i] - mt) * (std::log(contr[i]) - ml);
        den += (taus[i] - mt) * (taus[i] - mt);
    }
    rep.theta_fit = den > 0.0 ? std::exp(num / den) : 0.0;
    return rep;
}

double QuotientData::eval(double x) const {
    // interpolate only among nodes on the same side of gamma_xi
    const bool right = x >= gamma_xi;
    double best_lo_x = 0, best_lo_h = 0, best_hi_x = 0, best_hi_h = 0;
    bool have_lo = false, have_hi = false;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if ((xi[i] >= gamma_xi) != right) continue;
        if (xi[i] <= x && (!have_lo || xi[i] > best_lo_x)) {
            best_lo_x = xi[i];
            best_lo_h = h[i];
            have_lo = true;
        }
        if (xi[i] >= x && (!have_hi || xi[i] < best_hi_x)) {
            best_hi_x = xi[i];
            best_hi_h = h[i];
            have_hi = true;
        }
    }
    if (!have_lo && !have_hi) throw NumericalError("QuotientData::eval outside data range");
    if (!have_lo) return best_hi_h;
    if (!have_hi || best_hi_x == best_lo_x) return best_lo_h;
    const double s = (x - best_lo_x) / (best_hi_x - best_lo_x);
    return (1.0 - s) * best_lo_h + s * best_hi_h;
}

QuotientData stable_projection(const std::vector<ReturnSample>& samples,
                               const std::vector<Vec2>& stable_dirs, double gamma_center) {
    if (stable_dirs.empty() || stable_dirs.size() != samples.size())
        throw FoliationEstimateUnavailable("stable directions missing for quotient projection");

    // sign-aligned mean stable direction
    Vec2 mean = Vec2::Zero();
    const Vec2 ref = stable_dirs.front().normalized();
    for (const auto& d : stable_dirs) {
        Vec2 u = d.normalized();
        if (u.dot(ref) < 0.0) u = -u;
        mean += u;
    }
    if (mean.norm() < 1e-12)
        throw FoliationEstimateUnavailable("stable directions average to zero");
    mean.normalize();

    Vec2 w(-mean[1], mean[0]);
    if (w[0] < 0.0) w = -w;

    QuotientData q;
    q.transverse_axis = w;
    double mean_u2 = 0.0;
    int n = 0;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& s : samples) {
        if (s.censored) continue;
        pairs.emplace_back(s.x.dot(w), s.fx.dot(w));
        mean_u2 += s.x[1];
        ++n;
    }
    if (n > 0) mean_u2 /= n;
    q.gamma_xi = gamma_center * w[0] + mean_u2 * w[1];

    std::sort(pairs.begin(), pairs.end());
    for (const auto& [a, b] : pairs) {
        q.xi.push_back(a);
        q.h.push_back(b);
    }
    return q;
}

ReturnMapStats return_time_stats(const std::vector<ReturnSample>& samples) {
    ReturnMapStats st;
    double sum = 0.0;
    double mn = 1e300, mx = -1e300;
    for (const auto& s : samples) {
        if (s.censored) {
            ++st.censored_count;
            continue;
        }
        ++st.n_samples;
        sum += s.tau;
        mn = std::min(mn, s.tau);
        mx = std::max(mx, s.tau);
    }
    if (st.n_samples == 0) throw AllCensored("no non-censored return samples");
    st.mean_tau = sum / st.n_samples;
    st.min_tau = mn;
    st.max_tau = mx;
    return st;
}

BandCoverDiagnostic band_cover_check(const QuotientData& quotient,
                                     const std::vector<std::pair<double, double>>& partition,
                                     double eps_cover) {
    BandCoverDiagnostic diag;
    int covered_count = 0;
    for (const auto& [lo, hi] : partition) {
        // image points of this interval
        std::vector<double> img;
        for (std::size_t i = 0; i < quotient.xi.size(); ++i)
            if (quotient.xi[i] >= lo && quotient.xi[i] <= hi) img.push_back(quotient.h[i]);
        std::sort(img.begin(), img.end());

        bool covers_some = false;
        for (const auto& [a, b] : partition) {
            // every point of [a, b] must be within eps_cover of an image point
            std::vector<double> in;
            for (double v : img)
                if (v >= a - eps_cover && v <= b + eps_cover) in.push_back(v);
            if (in.empty()) continue;
            bool ok = (in.front() - a <= eps_cover) && (b - in.back() <= eps_cover);
            for (std::size_t i = 0; ok && i + 1 < in.size(); ++i)
                if (0.5 * (in[i + 1] - in[i]) > eps_cover) ok = false;
            if (ok) {
                covers_some = true;
                break;
            }
        }
        diag.interval_covers_some_element.push_back(covers_some);
        if (covers_some) ++covered_count;
    }
    diag.cover_fraction =
        partition.empty() ? 0.0 : static_cast<double>(covered_count) / partition.size();
    return diag;
}

void write_samples_csv(std::ostream& os, const std::vector<ReturnSample>& samples) {
    os << "x1,x2,fx1,fx2,tau,d11,d12,d21,d22,censored\n";
    for (const auto& s : samples) {
        os << s.x[0] << ',' << s.x[1] << ',' << s.fx[0] << ',' << s.fx[1] << ',' << s.tau << ','
           << s.d_return(0, 0) << ',' << s.d_return(0, 1) << ',' << s.d_return(1, 0) << ','
           << s.d_return(1, 1) << ',' << (s.censored ? 1 : 0) << '\n';
    }
}

}  // namespace lylab
