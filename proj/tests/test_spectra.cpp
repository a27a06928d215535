#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lylab/spectra.hpp"

using namespace lylab;

namespace {

const VectorFieldSpec kLorenz = VectorFieldSpec::lorenz();
const IntegratorConfig kCfg;

}  // namespace

TEST_CASE("flow spectrum of a constant diagonal generator") {
    MatX c0(2, 2);
    c0 << 2.0, 0.0, 0.0, -1.0;
    const auto gen = CocycleGenerator::constant(c0);
    const auto spec = qr_lyapunov_flow(gen, kLorenz, Vec3(1, 1, 20), 100.0, 1.0, 5.0, kCfg);
    REQUIRE(spec.exponents.size() == 2);
    CHECK(std::abs(spec.exponents[0] - 2.0) < 1e-8);
    CHECK(std::abs(spec.exponents[1] + 1.0) < 1e-8);
    REQUIRE(spec.gaps.size() == 1);
    CHECK(spec.gaps[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK_FALSE(spec.nonconvergence);
}

TEST_CASE("map spectrum of a repeated diagonal matrix") {
    MatX m(2, 2);
    m << 3.0, 0.0, 0.0, 1.0 / 3.0;
    const std::vector<MatX> mats(300, m);
    const auto spec = qr_lyapunov_map(mats);
    REQUIRE(spec.exponents.size() == 2);
    CHECK(std::abs(spec.exponents[0] - std::log(3.0)) < 1e-10);
    CHECK(std::abs(spec.exponents[1] + std::log(3.0)) < 1e-10);
}

TEST_CASE("map spectrum of a repeated generic matrix matches its eigenvalue moduli") {
    MatX m(2, 2);
    m << 1.1, 0.7, -0.3, 0.9;  // complex pair? check: tr=2, det=0.99+0.21=1.2
    // use a matrix with real distinct eigenvalues instead
    m << 2.0, 1.0, 0.5, 1.0;
    const Eigen::EigenSolver<MatX> es(m);
    std::vector<double> logs = {std::log(std::abs(es.eigenvalues()[0])),
                                std::log(std::abs(es.eigenvalues()[1]))};
    std::sort(logs.rbegin(), logs.rend());

    const std::vector<MatX> mats(400, m);
    const auto spec = qr_lyapunov_map(mats);
    CHECK(std::abs(spec.exponents[0] - logs[0]) < 1e-8);
    CHECK(std::abs(spec.exponents[1] - logs[1]) < 1e-8);
}

TEST_CASE("map spectrum is not the average of per-matrix spectra") {
    // rotating between a horizontal and a vertical stretch kills the top
    // exponent of the product even though each factor has log-norm log(2)
    MatX a(2, 2), b(2, 2);
    a << 2.0, 0.0, 0.0, 0.5;
    b << 0.5, 0.0, 0.0, 2.0;
    std::vector<MatX> mats;
    for (int i = 0; i < 400; ++i) mats.push_back(i % 2 == 0 ? a : b);
    const auto spec = qr_lyapunov_map(mats);
    CHECK(std::abs(spec.exponents[0]) < 1e-8);
    CHECK(std::abs(spec.exponents[1]) < 1e-8);
}

TEST_CASE("reversed inverted product negates and reverses the spectrum") {
    // periodic sequence: the per-period block of the reversed-inverted list is
    // exactly the inverse of the forward block, so the exponents negate and
    // reverse with geometric convergence
    MatX a1(2, 2), a2(2, 2), a3(2, 2), a4(2, 2);
    a1 << 2.0, 1.0, 0.0, 0.6;
    a2 << 1.0, 0.0, 0.4, 1.2;
    a3 << 1.8, -0.5, 0.2, 0.5;
    a4 << 0.9, 0.3, -0.1, 1.4;
    const MatX block = a4 * a3 * a2 * a1;
    const Eigen::EigenSolver<MatX> es(block);
    const double m0 = std::abs(es.eigenvalues()[0]);
    const double m1 = std::abs(es.eigenvalues()[1]);
    REQUIRE(std::max(m0, m1) / std::min(m0, m1) > 5.0);  // fast QR convergence

    std::vector<MatX> mats;
    for (int i = 0; i < 150; ++i) {
        mats.push_back(a1);
        mats.push_back(a2);
        mats.push_back(a3);
        mats.push_back(a4);
    }
    std::vector<MatX> inv;
    for (auto it = mats.rbegin(); it != mats.rend(); ++it) inv.push_back(it->inverse());

    const auto fwd = qr_lyapunov_map(mats);
    const auto bwd = qr_lyapunov_map(inv);
    CHECK(std::abs(fwd.exponents[0] + bwd.exponents[1]) < 1e-8);
    CHECK(std::abs(fwd.exponents[1] + bwd.exponents[0]) < 1e-8);
    // and the forward exponents match the per-period eigenvalue moduli
    CHECK(std::abs(fwd.exponents[0] - 0.25 * std::log(std::max(m0, m1))) < 1e-8);
}

TEST_CASE("renormalization interval does not change the exponents") {
    MatX c0(2, 2);
    c0 << 0.5, 0.2, 0.0, -0.5;
    const auto gen = CocycleGenerator::constant(c0);
    const auto s1 = qr_lyapunov_flow(gen, kLorenz, Vec3(1, 1, 20), 60.0, 1.0, 5.0, kCfg);
    const auto s2 = qr_lyapunov_flow(gen, kLorenz, Vec3(1, 1, 20), 60.0, 0.5, 5.0, kCfg);
    CHECK(std::abs(s1.exponents[0] - s2.exponents[0]) < 1e-7);
    CHECK(std::abs(s1.exponents[1] - s2.exponents[1]) < 1e-7);
}

TEST_CASE("simplicity verdict") {
    LyapunovSpectrum s;
    s.exponents = {1.0, 0.1};
    s.gaps = {0.9};
    s.half_widths = {0.01, 0.01};
    CHECK(simplicity_verdict(s, 1e-4).simple);
    CHECK(simplicity_verdict(s, 1e-4).resolved);
    CHECK(simplicity_verdict(s, 1e-4).min_gap == doctest::Approx(0.9));

    // unresolved: gap smaller than the uncertainty
    s.half_widths = {0.5, 0.5};
    CHECK_FALSE(simplicity_verdict(s, 1e-4).resolved);
    CHECK_FALSE(simplicity_verdict(s, 1e-4).simple);

    // resolved but below the floor
    s.gaps = {5e-5};
    s.half_widths = {1e-6, 1e-6};
    const auto v = simplicity_verdict(s, 1e-4);
    CHECK(v.resolved);
    CHECK_FALSE(v.simple);
}

TEST_CASE("exponent relation check with constant return time") {
    LyapunovSpectrum flow;
    flow.exponents = {0.3, -0.2};
    LyapunovSpectrum map;
    map.exponents = {0.6, -0.4};  // exactly mean_tau * flow with mean_tau = 2
    const auto errs = exponent_relation_check(flow, map, 2.0);
    REQUIRE(errs.size() == 2);
    CHECK(errs[0] < 1e-12);
    CHECK(errs[1] < 1e-12);

    map.exponents = {0.66, -0.4};
    const auto errs2 = exponent_relation_check(flow, map, 2.0);
    CHECK(errs2[0] == doctest::Approx(0.1).epsilon(1e-9));

    LyapunovSpectrum wrong;
    wrong.exponents = {1.0};
    CHECK_THROWS_AS(exponent_relation_check(flow, wrong, 2.0), DimensionMismatch);
}

TEST_CASE("drop_flow_exponent removes the exponent nearest zero") {
    LyapunovSpectrum s;
    s.exponents = {0.9, 0.02, -11.0};
    s.half_widths = {0.1, 0.1, 0.1};
    const auto r = drop_flow_exponent(s);
    REQUIRE(r.exponents.size() == 2);
    CHECK(r.exponents[0] == doctest::Approx(0.9));
    CHECK(r.exponents[1] == doctest::Approx(-11.0));
}

TEST_CASE("covariant splitting recovers the axes of the linear model") {
    const auto sing = VectorFieldSpec::linear_singularity(-3.0, -1.0, 2.0);
    // keep coordinates bounded: small unstable component, generic stable part
    const Vec3 x0(0.1, 1e-6, 0.1);
    const auto samples = covariant_splitting(sing, x0, 4.0, 4.0, kCfg, 10, 0.1);
    REQUIRE(!samples.empty());
    int checked = 0;
    for (const auto& s : samples) {
        if (!s.ok) continue;
        ++checked;
        // unstable = y axis, strong stable = x axis
        CHECK(std::abs(std::abs(s.e_u.dot(Vec3::UnitY())) - 1.0) < 1e-6);
        CHECK(std::abs(std::abs(s.e_s.dot(Vec3::UnitX())) - 1.0) < 1e-6);
    }
    CHECK(checked > 0);
}

TEST_CASE("covariant splitting on Lorenz: flow direction and pushforward invariance") {
    IntegratorConfig cfg;
    const Vec3 settled = integrate_flow(kLorenz, Vec3(1, 1, 20), 25.0, cfg).points.back();
    const auto samples = covariant_splitting(kLorenz, settled, 30.0, 30.0, cfg, 40, 0.25);
    REQUIRE(samples.size() >= 20);

    int ok_flow = 0, ok_push = 0, n = 0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!s.ok) continue;
        ++n;
        const Vec3 f = evaluate_field(kLorenz, s.point).normalized();
        if (std::abs(std::abs(s.e_flow.dot(f)) - 1.0) < 1e-9) ++ok_flow;

        // pushforward of e_u at sample i should align with e_u at sample i+1
        const auto& s2 = samples[i + 1];
        if (!s2.ok) continue;
        const double dt = s2.t - s.t;
        if (dt <= 0.0 || dt > 1.0) continue;
        const auto var = integrate_variational(kLorenz, s.point, dt, cfg);
        const Vec3 pushed = (var.matrix_path.back() * s.e_u).normalized();
        if (std::abs(pushed.dot(s2.e_u)) > 0.999) ++ok_push;
    }
    REQUIRE(n > 10);
    CHECK(ok_flow == n);
    CHECK(ok_push > 0.9 * n);
}

TEST_CASE("Lorenz flow spectrum has a near-zero middle exponent") {
    const auto gen = CocycleGenerator::dynamical();
    const Vec3 settled = integrate_flow(kLorenz, Vec3(1, 1, 20), 25.0, kCfg).points.back();
    const auto spec = qr_lyapunov_flow(gen, kLorenz, settled, 300.0, 0.5, 20.0, kCfg);
    REQUIRE(spec.exponents.size() == 3);
    CHECK(spec.exponents[0] > 0.5);             // positive exponent ~0.9
    CHECK(std::abs(spec.exponents[1]) < 0.01);  // flow direction
    CHECK(spec.exponents[2] < -10.0);           // strong contraction ~-14.5
    // volume identity: sum = -(sigma + 1 + b)
    const double sum = spec.exponents[0] + spec.exponents[1] + spec.exponents[2];
    CHECK(std::abs(sum + (10.0 + 1.0 + 8.0 / 3.0)) < 0.05);
}

TEST_CASE("singular hyperbolicity certificate for the linear model") {
    const auto sing = VectorFieldSpec::linear_singularity(-3.0, -1.0, 2.0);
    const auto samples = covariant_splitting(sing, Vec3(0.1, 1e-6, 0.1), 4.0, 4.0, kCfg, 8, 0.1);
    REQUIRE(!samples.empty());
    // theta = e^{-1}: ||DX^t e_s|| = e^{-3t} (strong axis), E^cu expands
    const auto rep =
        check_singular_hyperbolicity(samples, sing, {0.5, 1.0, 2.0}, std::exp(-1.0), kCfg);
    CHECK(rep.pass_fraction_all == doctest::Approx(1.0));
    CHECK(rep.pass_fraction_domination == doctest::Approx(1.0));
    CHECK(rep.pass_fraction_contraction == doctest::Approx(1.0));
    CHECK(rep.pass_fraction_volume == doctest::Approx(1.0));
    CHECK(rep.theta_min_certified < std::exp(-1.0) + 1e-9);
}

TEST_CASE("singular hyperbolicity fails when the stable contraction is too weak") {
    // strong stable rate e^{-0.3 t} cannot beat theta^t with theta = e^{-1}
    const auto weak = VectorFieldSpec::linear_singularity(-0.3, -0.2, 1.0);
    const auto samples = covariant_splitting(weak, Vec3(0.1, 1e-6, 0.1), 3.0, 3.0, kCfg, 6, 0.1);
    REQUIRE(!samples.empty());
    const auto rep = check_singular_hyperbolicity(samples, weak, {1.0, 2.0}, std::exp(-1.0), kCfg);
    CHECK(rep.pass_fraction_contraction < 0.5);
    CHECK(rep.pass_fraction_all < 0.5);
}

TEST_CASE("Lorenz singular hyperbolicity passes at a modest theta") {
    IntegratorConfig cfg;
    const Vec3 settled = integrate_flow(kLorenz, Vec3(1, 1, 20), 25.0, cfg).points.back();
    const auto samples = covariant_splitting(kLorenz, settled, 30.0, 30.0, cfg, 25, 0.4);
    REQUIRE(samples.size() >= 15);
    const auto rep = check_singular_hyperbolicity(samples, kLorenz, {1.0, 2.0, 4.0}, 0.5, cfg);
    CHECK(rep.pass_fraction_contraction > 0.95);
    CHECK(rep.pass_fraction_domination > 0.95);
    CHECK(rep.pass_fraction_volume > 0.95);
}
