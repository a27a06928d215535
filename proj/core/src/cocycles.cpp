#include "lylab/cocycles.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "lylab/rng.hpp"

namespace lylab {

using nlohmann::json;

void CocycleGenerator::validate() const {
    if (dim < 2) throw ConfigError("cocycle dimension must be >= 2");
    if (kind == Kind::Dynamical) {
        if (dim != 3 || scalars != Scalars::Real)
            throw ConfigError("Dynamical cocycle requires d = 3 and real scalars");
        return;
    }
    const int n = mat_dim();
    if (c0.rows() != n || c0.cols() != n) throw ConfigError("c0 has wrong dimensions");
    for (const auto& m : modes) {
        if (m.ccos.rows() != n || m.ccos.cols() != n || m.csin.rows() != n || m.csin.cols() != n)
            throw ConfigError("mode coefficient has wrong dimensions");
    }
}

MatX CocycleGenerator::evaluate(const Vec3& p) const {
    const int n = mat_dim();
    MatX g = c0;
    if (g.size() == 0) g = MatX::Zero(n, n);
    for (const auto& m : modes) {
        const double phase = m.w.dot(p);
        g += m.ccos * std::cos(phase) + m.csin * std::sin(phase);
    }
    if (traceless) g -= (g.trace() / n) * MatX::Identity(n, n);
    return g;
}

CocycleGenerator CocycleGenerator::dynamical() {
    CocycleGenerator g;
    g.kind = Kind::Dynamical;
    g.dim = 3;
    g.scalars = Scalars::Real;
    return g;
}

CocycleGenerator CocycleGenerator::zero(int dim) {
    CocycleGenerator g;
    g.kind = Kind::GeneratorField;
    g.dim = dim;
    g.c0 = MatX::Zero(dim, dim);
    return g;
}

CocycleGenerator CocycleGenerator::constant(const MatX& c0, bool traceless) {
    CocycleGenerator g;
    g.kind = Kind::GeneratorField;
    g.dim = static_cast<int>(c0.rows());
    g.c0 = c0;
    g.traceless = traceless;
    return g;
}

CocycleGenerator CocycleGenerator::random_trig(int dim, int n_modes, std::uint64_t seed,
                                               double amplitude, bool traceless) {
    CocycleGenerator g = zero(dim);
    g.traceless = traceless;
    auto rng = make_rng(splitmix64(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> freq(-1.5, 1.5);

    double coeff_norm = 0.0;
    for (int k = 0; k < n_modes; ++k) {
        TrigMode m;
        m.w = Vec3(freq(rng), freq(rng), freq(rng));
        m.ccos = MatX::NullaryExpr(dim, dim, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        m.csin = MatX::NullaryExpr(dim, dim, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        coeff_norm += m.ccos.norm() + m.csin.norm();
        g.modes.push_back(std::move(m));
    }
    if (coeff_norm > 0.0) {
        const double s = amplitude / coeff_norm;
        for (auto& m : g.modes) {
            m.ccos *= s;
            m.csin *= s;
        }
    }
    return g;
}

namespace {

json matrix_to_json(const MatX& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
    return a;
}

MatX matrix_from_json(const json& a, int n) {
    if (!a.is_array() || static_cast<int>(a.size()) != n * n)
        throw ConfigError("matrix array has wrong length");
    MatX m(n, n);
    int k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a.at(k++).get<double>();
    return m;
}

}  // namespace

json CocycleGenerator::to_json() const {
    json j;
    j["kind"] = kind == Kind::Dynamical ? "dynamical" : "generator-field";
    j["dim"] = dim;
    j["scalars"] = scalars == Scalars::Complex ? "complex" : "real";
    j["traceless"] = traceless;
    if (kind == Kind::GeneratorField) {
        j["C0"] = matrix_to_json(c0);
        json ms = json::array();
        for (const auto& m : modes) {
            json mj;
            mj["w"] = {m.w[0], m.w[1], m.w[2]};
            mj["Ccos"] = matrix_to_json(m.ccos);
            mj["Csin"] = matrix_to_json(m.csin);
            ms.push_back(mj);
        }
        j["modes"] = ms;
    }
    return j;
}

CocycleGenerator CocycleGenerator::from_json(const json& j) {
    CocycleGenerator g;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dynamical") {
        g = dynamical();
        return g;
    }
    if (kind != "generator-field") throw ConfigError("unknown cocycle kind: " + kind);
    g.kind = Kind::GeneratorField;
    g.dim = j.at("dim").get<int>();
    const std::string sc = j.value("scalars", "real");
    if (sc == "complex")
        g.scalars = Scalars::Complex;
    else if (sc != "real")
        throw ConfigError("unknown scalars: " + sc);
    g.traceless = j.value("traceless", false);
    const int n = g.mat_dim();
    g.c0 = matrix_from_json(j.at("C0"), n);
    if (j.contains("modes")) {
        for (const auto& mj : j.at("modes")) {
            TrigMode m;
            const auto& w = mj.at("w");
            m.w = Vec3(w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>());
            m.ccos = matrix_from_json(mj.at("Ccos"), n);
            m.csin = matrix_from_json(mj.at("Csin"), n);
            g.modes.push_back(std::move(m));
        }
    }
    g.validate();
    return g;
}

MatX evolve_cocycle(const CocycleGenerator& gen, const VectorFieldSpec& spec, const Vec3& x0,
                    double t, const IntegratorConfig& cfg) {
    gen.validate();
    if (t < 0.0) throw ConfigError("evolve_cocycle requires t >= 0");
    const int n = gen.mat_dim();
    if (t == 0.0) return MatX::Identity(n, n);

    if (gen.kind == CocycleGenerator::Kind::Dynamical) {
        Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
            Vec3 p;
            MatX m(3, 3);
            unpack_state_matrix(y, p, m);
            dydt = pack_state_matrix(evaluate_field(spec, p), jacobian_field(spec, p) * m);
        };
        const VecX y1 = integrate_ode(rhs, pack_state_matrix(x0, Mat3::Identity()), 0.0, t, cfg);
        Vec3 p;
        MatX m(3, 3);
        unpack_state_matrix(y1, p, m);
        return m;
    }

    Rhs rhs = [&gen, &spec, n](double, const VecX& y, VecX& dydt) {
        Vec3 p;
        MatX m(n, n);
        unpack_state_matrix(y, p, m);
        dydt = pack_state_matrix(evaluate_field(spec, p), gen.evaluate(p) * m);
    };
    const VecX y1 = integrate_ode(rhs, pack_state_matrix(x0, MatX::Identity(n, n)), 0.0, t, cfg);
    Vec3 p;
    MatX m(n, n);
    unpack_state_matrix(y1, p, m);
    return m;
}

std::vector<std::pair<int, MatX>> induce_map_cocycle(const CocycleGenerator& gen,
                                                     const VectorFieldSpec& spec,
                                                     const CrossSection& sec,
                                                     const std::vector<ReturnSample>& samples,
                                                     const IntegratorConfig& cfg) {
    std::vector<std::pair<int, MatX>> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].censored) continue;
        const Vec3 p0 = sec.embed(samples[i].x);
        out.emplace_back(static_cast<int>(i), evolve_cocycle(gen, spec, p0, samples[i].tau, cfg));
    }
    return out;
}

HoelderEstimate estimate_hoelder(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                 const std::vector<std::pair<Vec3, Vec3>>& sample_points,
                                 double eta, double t, const IntegratorConfig& cfg) {
    if (!(t > 0.0)) throw ConfigError("estimate_hoelder requires t > 0");
    HoelderEstimate est;
    est.eta = eta;
    est.t_used = t;
    for (const auto& [x, y] : sample_points) {
        const double d = (x - y).norm();
        if (d == 0.0) throw ConfigError("estimate_hoelder requires distinct pairs");
        const MatX ax = evolve_cocycle(gen, spec, x, t, cfg);
        const MatX ay = evolve_cocycle(gen, spec, y, t, cfg);
        est.constant = std::max(est.constant, spectral_norm(ax - ay) / std::pow(d, eta));
        ++est.n_pairs;
    }
    return est;
}

double spectral_norm(const MatX& m) {
    return m.jacobiSvd().singularValues()(0);
}

double inverse_spectral_norm(const MatX& m) {
    const VecX sv = m.jacobiSvd().singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0 || sv(0) / smin > 1e12)
        throw SingularMatrix("matrix numerically singular (cond > 1e12)");
    return 1.0 / smin;
}

BunchingReport check_bunching_flow(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                   const std::vector<Vec3>& points, double theta, double eta,
                                   const std::vector<double>& t_grid,
                                   const IntegratorConfig& cfg) {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");
    for (double t : t_grid)
        if (!(t > 0.0)) throw ConfigError("t_grid entries must be positive");

    BunchingReport rep;
    rep.form = BunchingReport::Form::Flow;
    rep.theta = theta;
    rep.eta = eta;
    rep.times = t_grid;
    double gmax = 0.0;
    for (const auto& x : points) {
        for (double t : t_grid) {
            const MatX a = evolve_cocycle(gen, spec, x, t, cfg);
            const double kappa =
                spectral_norm(a) * inverse_spectral_norm(a) * std::pow(theta, t * eta);
            gmax = std::max(gmax, std::pow(kappa, 1.0 / t));
            ++rep.n_samples;
        }
    }
    rep.gamma_star = gmax;
    rep.margin = -std::log(gmax);
    rep.verdict = gmax < 1.0;
    return rep;
}

BunchingReport check_bunching_map(const std::vector<std::pair<MatX, double>>& pairs, double theta,
                                  double eta) {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");

    BunchingReport rep;
    rep.form = BunchingReport::Form::Map;
    rep.theta = theta;
    rep.eta = eta;
    double gmax = 0.0;
    for (const auto& [a, tau] : pairs) {
        if (!(tau > 0.0)) throw ConfigError("return times must be positive");
        const double kappa =
            spectral_norm(a) * inverse_spectral_norm(a) * std::pow(std::pow(theta, tau), eta);
        gmax = std::max(gmax, kappa);
        rep.times.push_back(tau);
        if (tau <= 1.0) ++rep.n_tau_le_1;
        ++rep.n_samples;
    }
    rep.gamma_star = gmax;
    rep.margin = -std::log(gmax);
    rep.verdict = gmax < 1.0;
    return rep;
}

CocycleGenerator perturb_generator(const CocycleGenerator& gen, double epsilon,
                                   std::uint64_t seed) {
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (gen.kind == CocycleGenerator::Kind::Dynamical)
        throw ConfigError("the dynamical cocycle has no free coefficients to perturb");
    if (epsilon == 0.0) return gen;

    constexpr int kPerturbationModes = 3;
    const CocycleGenerator r = CocycleGenerator::random_trig(
        gen.mat_dim(), kPerturbationModes, seed, /*amplitude=*/1.0, gen.traceless);

    CocycleGenerator out = gen;
    for (const auto& rm : r.modes) {
        // merge onto an existing mode with exactly matching frequency, else append
        auto it = std::find_if(out.modes.begin(), out.modes.end(),
                               [&](const TrigMode& m) { return m.w == rm.w; });
        if (it != out.modes.end()) {
            it->ccos += epsilon * rm.ccos;
            it->csin += epsilon * rm.csin;
        } else {
            TrigMode m;
            m.w = rm.w;
            m.ccos = epsilon * rm.ccos;
            m.csin = epsilon * rm.csin;
            out.modes.push_back(std::move(m));
        }
    }
    return out;
}

}  // namespace lylab
