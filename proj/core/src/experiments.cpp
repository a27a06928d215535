#include "lylab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "lylab/rng.hpp"

namespace lylab {

namespace {

// Deterministic parallel map: results land in a pre-sized vector indexed by
// cell, so aggregation order is independent of scheduling.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - lo;
    return (1.0 - frac) * v[lo] + frac * v[hi];
}

SeedRecord run_cell(const ScanConfig& cfg, const CocycleGenerator& base, double epsilon,
                    std::size_t eps_index, std::uint64_t seed) {
    SeedRecord rec;
    rec.seed = seed;
    rec.epsilon = epsilon;
    try {
        const std::uint64_t key = stream_key(cfg.experiment_id, seed, eps_index);
        const CocycleGenerator pert = perturb_generator(base, epsilon, key);
        auto rng = make_rng(splitmix64(key ^ 0x5eedULL));
        std::uniform_real_distribution<double> jitter(-0.5, 0.5);
        const Vec3 x0 = cfg.x0 + Vec3(jitter(rng), jitter(rng), jitter(rng));
        const LyapunovSpectrum spec = qr_lyapunov_flow(pert, cfg.flow, x0, cfg.horizon_T,
                                                       cfg.renorm_dt, cfg.transient,
                                                       cfg.integrator);
        const SimplicityVerdict v = simplicity_verdict(spec, cfg.gap_floor);
        rec.min_gap = v.min_gap;
        rec.simple = v.simple;
        rec.resolved = v.resolved;
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

void ScanConfig::validate() const {
    if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
    double prev = -1.0;
    for (double e : epsilon_grid) {
        if (e < 0.0) throw ConfigError("epsilon_grid entries must be non-negative");
        if (e < prev) throw ConfigError("epsilon_grid must be ascending");
        prev = e;
    }
    if (!(gap_floor > 0.0)) throw ConfigError("gap_floor must be positive");
    if (!(horizon_T > transient && transient > 0.0))
        throw ConfigError("require horizon_T > transient > 0");
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");
    integrator.validate();
    base_generator.validate();
}

ScanResult simplicity_scan(const ScanConfig& cfg) {
    cfg.validate();
    ScanResult res;

    // fiber-bunching precheck on a short attractor sample (warn, don't abort)
    {
        std::vector<Vec3> pts;
        Vec3 x = cfg.x0;
        const Rhs rhs = [&cfg](double, const VecX& y, VecX& dydt) {
            dydt = VecX(evaluate_field(cfg.flow, Vec3(y.head<3>())));
        };
        VecX y(3);
        y = x;
        y = integrate_ode(rhs, y, 0.0, 20.0, cfg.integrator);
        for (int i = 0; i < 8; ++i) {
            y = integrate_ode(rhs, y, 0.0, 2.0, cfg.integrator);
            pts.push_back(Vec3(y.head<3>()));
        }
        const BunchingReport rep = check_bunching_flow(cfg.base_generator, cfg.flow, pts,
                                                       cfg.theta, cfg.eta, {1.0}, cfg.integrator);
        res.base_bunched = rep.verdict;
        res.base_gamma_star = rep.gamma_star;
    }

    const int n_eps = static_cast<int>(cfg.epsilon_grid.size());
    const int n_cells = n_eps * cfg.n_seeds;
    res.records.resize(n_cells);
    parallel_for(n_cells, cfg.jobs, [&](int cell) {
        const int e = cell / cfg.n_seeds;
        const int s = cell % cfg.n_seeds;
        res.records[cell] = run_cell(cfg, cfg.base_generator, cfg.epsilon_grid[e],
                                     static_cast<std::size_t>(e),
                                     cfg.seed_offset + static_cast<std::uint64_t>(s));
    });

    for (int e = 0; e < n_eps; ++e) {
        EpsilonAggregate agg;
        agg.epsilon = cfg.epsilon_grid[e];
        std::vector<double> gaps;
        int n_simple = 0;
        for (int s = 0; s < cfg.n_seeds; ++s) {
            const SeedRecord& rec = res.records[e * cfg.n_seeds + s];
            if (rec.failed) {
                ++agg.failed_count;
                continue;
            }
            if (!rec.resolved) {
                ++agg.unresolved_count;
                continue;
            }
            ++agg.n_resolved;
            gaps.push_back(rec.min_gap);
            if (rec.simple) ++n_simple;
        }
        agg.fraction_simple =
            agg.n_resolved > 0 ? static_cast<double>(n_simple) / agg.n_resolved : 0.0;
        agg.gap_q10 = quantile(gaps, 0.1);
        agg.gap_q50 = quantile(gaps, 0.5);
        agg.gap_q90 = quantile(gaps, 0.9);
        res.per_epsilon.push_back(agg);
    }
    return res;
}

OpennessResult openness_probe(const CocycleGenerator& gen_simple, const ScanConfig& cfg,
                              const std::vector<double>& delta_grid, int n_seeds) {
    cfg.integrator.validate();
    OpennessResult res;

    {
        // the probe is anchored at a resolved simple spectrum
        const LyapunovSpectrum base = qr_lyapunov_flow(gen_simple, cfg.flow, cfg.x0, cfg.horizon_T,
                                                       cfg.renorm_dt, cfg.transient,
                                                       cfg.integrator);
        const SimplicityVerdict v = simplicity_verdict(base, cfg.gap_floor);
        if (!v.simple || !v.resolved)
            throw ConfigError("openness_probe requires a resolved simple base spectrum");
        res.base_min_gap = v.min_gap;
    }

    const int n_cells = static_cast<int>(delta_grid.size()) * n_seeds;
    std::vector<SeedRecord> records(n_cells);
    parallel_for(n_cells, cfg.jobs, [&](int cell) {
        const int d = cell / n_seeds;
        const int s = cell % n_seeds;
        records[cell] = run_cell(cfg, gen_simple, delta_grid[d],
                                 static_cast<std::size_t>(d) + 1000,
                                 cfg.seed_offset + static_cast<std::uint64_t>(s));
    });

    for (std::size_t d = 0; d < delta_grid.size(); ++d) {
        OpennessPoint pt;
        pt.delta = delta_grid[d];
        pt.min_gap_over_seeds = std::numeric_limits<double>::infinity();
        int retained = 0;
        for (int s = 0; s < n_seeds; ++s) {
            const SeedRecord& rec = records[d * n_seeds + s];
            if (rec.failed || !rec.resolved) continue;
            ++pt.n_resolved;
            if (rec.simple) ++retained;
            pt.min_gap_over_seeds = std::min(pt.min_gap_over_seeds, rec.min_gap);
        }
        pt.retention = pt.n_resolved > 0 ? static_cast<double>(retained) / pt.n_resolved : 0.0;
        res.per_delta.push_back(pt);
    }
    return res;
}

SuspensionReport suspension_consistency(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                        const CrossSection& sec, const Vec2& x0, int n_returns,
                                        const IntegratorConfig& cfg, double tau_min,
                                        double tau_max) {
    gen.validate();
    SuspensionReport rep;
    rep.n_returns = n_returns;

    // One continuous orbit supplies both the per-leg return times and the
    // n-th crossing time: chaining separately re-integrated returns would let
    // sensitive dependence amplify the re-embedding round-off, breaking the
    // telescoping time identity long before 100 returns.
    std::vector<double> t_cross;
    std::vector<Vec3> x_cross;
    {
        IntegratorConfig long_cfg = cfg;
        const double horizon = tau_max * n_returns;
        long_cfg.max_time = std::max(long_cfg.max_time, horizon);
        const Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
            dydt = VecX(evaluate_field(spec, Vec3(y.head<3>())));
        };
        double last_t = 0.0;
        integrate_ode(rhs, VecX(sec.embed(x0)), 0.0, horizon, long_cfg,
                      [&](const DenseSegment& seg) {
                          const double g0 = (Vec3(seg.y0.head<3>()) - sec.base).dot(sec.normal);
                          const double g1 = (Vec3(seg.y1.head<3>()) - sec.base).dot(sec.normal);
                          if (g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0)) {
                              double ta = seg.t0, tb = seg.t1;
                              while (tb - ta > 1e-11) {
                                  const double tm = 0.5 * (ta + tb);
                                  const double gm =
                                      (Vec3(seg.eval(tm).head<3>()) - sec.base).dot(sec.normal);
                                  if ((g0 <= 0.0) == (gm <= 0.0))
                                      ta = tm;
                                  else
                                      tb = tm;
                              }
                              const double t_star = 0.5 * (ta + tb);
                              const double dg =
                                  seg.eval_derivative(t_star).head<3>().dot(sec.normal);
                              if ((sec.direction == 0 || dg * sec.direction > 0.0) &&
                                  t_star - last_t >= tau_min) {
                                  if (t_star - last_t > tau_max)
                                      throw NumericalError(
                                          "suspension_consistency hit a censored return at leg " +
                                          std::to_string(t_cross.size()));
                                  last_t = t_star;
                                  t_cross.push_back(t_star);
                                  x_cross.push_back(Vec3(seg.eval(t_star).head<3>()));
                                  if (static_cast<int>(t_cross.size()) == n_returns) return false;
                              }
                          }
                          return true;
                      });
        if (static_cast<int>(t_cross.size()) < n_returns)
            throw NumericalError("continuous orbit lost the section crossings");
    }
    rep.orbit_time = t_cross.back();

    // product of per-return cocycle legs, each started at the recorded
    // crossing point of the shared orbit
    const int d = gen.mat_dim();
    MatX product = MatX::Identity(d, d);
    double s_n = 0.0;
    double prev_t = 0.0;
    Vec3 prev_x = sec.embed(x0);
    for (int i = 0; i < n_returns; ++i) {
        const double tau = t_cross[i] - prev_t;
        const MatX leg = evolve_cocycle(gen, spec, prev_x, tau, cfg);
        product = leg * product;
        s_n += tau;
        prev_t = t_cross[i];
        prev_x = x_cross[i];
    }
    rep.s_n = s_n;
    rep.time_rel_error = std::abs(s_n - rep.orbit_time) / s_n;

    // direct evolution over the same total time
    const MatX direct = evolve_cocycle(gen, spec, sec.embed(x0), s_n, cfg);
    rep.matrix_rel_error = spectral_norm(product - direct) / spectral_norm(direct);

    const Eigen::JacobiSVD<MatX> sp(product), sd(direct);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        worst = std::max(worst, std::abs(std::log(sp.singularValues()(i)) -
                                         std::log(sd.singularValues()(i))) /
                                    s_n);
    }
    rep.exponent_error = worst;
    return rep;
}

Observable observable_from_name(const std::string& name) {
    if (name == "one") return Observable::One;
    if (name == "x") return Observable::X;
    if (name == "y") return Observable::Y;
    if (name == "z") return Observable::Z;
    if (name == "z2") return Observable::Z2;
    if (name == "z_gt_27") return Observable::IndicatorZGt27;
    throw ConfigError("unknown observable: " + name);
}

std::string observable_name(Observable o) {
    switch (o) {
        case Observable::One: return "one";
        case Observable::X: return "x";
        case Observable::Y: return "y";
        case Observable::Z: return "z";
        case Observable::Z2: return "z2";
        case Observable::IndicatorZGt27: return "z_gt_27";
    }
    return "?";
}

double evaluate_observable(Observable o, const Vec3& p) {
    switch (o) {
        case Observable::One: return 1.0;
        case Observable::X: return p.x();
        case Observable::Y: return p.y();
        case Observable::Z: return p.z();
        case Observable::Z2: return p.z() * p.z();
        case Observable::IndicatorZGt27: return p.z() > 27.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

BirkhoffReport birkhoff_check(const VectorFieldSpec& spec, Observable obs,
                              const std::vector<Vec3>& x0_list, double T,
                              const IntegratorConfig& cfg, double transient) {
    BirkhoffReport rep;
    rep.observable = obs;
    rep.horizon = T;

    bool first = true;
    for (const auto& x0 : x0_list) {
        const Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
            dydt = VecX(evaluate_field(spec, Vec3(y.head<3>())));
        };
        VecX y = integrate_ode(rhs, VecX(x0), 0.0, transient, cfg);

        double integral = 0.0, total = 0.0;
        double sq = 0.0;
        integrate_ode(rhs, y, 0.0, T, cfg, [&](const DenseSegment& seg) {
            const double h = seg.t1 - seg.t0;
            const double fa = evaluate_observable(obs, Vec3(seg.y0.head<3>()));
            const double fm =
                evaluate_observable(obs, Vec3(seg.eval(0.5 * (seg.t0 + seg.t1)).head<3>()));
            const double fb = evaluate_observable(obs, Vec3(seg.y1.head<3>()));
            integral += h / 6.0 * (fa + 4.0 * fm + fb);  // Simpson on the Hermite interpolant
            sq += h / 6.0 * (fa * fa + 4.0 * fm * fm + fb * fb);
            total += h;
            return true;
        });
        rep.averages.push_back(integral / total);
        if (first) {
            const double mean = integral / total;
            rep.empirical_std = std::sqrt(std::max(0.0, sq / total - mean * mean));
            first = false;
        }
    }

    for (std::size_t i = 0; i < rep.averages.size(); ++i)
        for (std::size_t j = i + 1; j < rep.averages.size(); ++j)
            rep.max_pairwise_spread =
                std::max(rep.max_pairwise_spread, std::abs(rep.averages[i] - rep.averages[j]));
    return rep;
}

}  // namespace lylab
