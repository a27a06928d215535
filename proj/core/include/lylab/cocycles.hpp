#ifndef LYLAB_COCYCLES_HPP
#define LYLAB_COCYCLES_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lylab/flows.hpp"
#include "lylab/sections.hpp"
#include "lylab/types.hpp"

namespace lylab {

/// One frequency of a matrix-valued trigonometric polynomial.
struct TrigMode {
    Vec3 w = Vec3::Zero();
    MatX ccos;
    MatX csin;
};

/// Generates a linear cocycle A^t(x) by integrating M' = G(X^s x) M along
/// orbits, where G(p) = C0 + sum_k(Ccos_k cos(w_k.p) + Csin_k sin(w_k.p)).
/// The Dynamical kind is the special case A^t = DX^t (d = 3, real scalars).
/// Complex scalars are stored in the doubled real representation, so the
/// working matrix dimension is mat_dim() = 2d for complex, d for real.
struct CocycleGenerator {
    enum class Kind { Dynamical, GeneratorField };
    enum class Scalars { Real, Complex };

    Kind kind = Kind::GeneratorField;
    int dim = 2;
    Scalars scalars = Scalars::Real;
    bool traceless = false;
    MatX c0;
    std::vector<TrigMode> modes;

    int mat_dim() const { return scalars == Scalars::Complex ? 2 * dim : dim; }

    /// G(p), with the zero-trace projection applied when traceless is set.
    MatX evaluate(const Vec3& p) const;

    void validate() const;

    static CocycleGenerator dynamical();
    static CocycleGenerator zero(int dim);
    static CocycleGenerator constant(const MatX& c0, bool traceless = false);
    /// Seed-deterministic random trigonometric field with n_modes frequencies
    /// and total coefficient norm `amplitude`.
    static CocycleGenerator random_trig(int dim, int n_modes, std::uint64_t seed,
                                        double amplitude = 1.0, bool traceless = false);

    nlohmann::json to_json() const;
    static CocycleGenerator from_json(const nlohmann::json& j);
};

/// A^t(x0): identity at t = 0 exactly; otherwise co-integrated with the flow.
MatX evolve_cocycle(const CocycleGenerator& gen, const VectorFieldSpec& spec, const Vec3& x0,
                    double t, const IntegratorConfig& cfg);

/// Induced section cocycle A_f(x) = A^{tau(x)}(x) for each non-censored sample.
std::vector<std::pair<int, MatX>> induce_map_cocycle(const CocycleGenerator& gen,
                                                     const VectorFieldSpec& spec,
                                                     const CrossSection& sec,
                                                     const std::vector<ReturnSample>& samples,
                                                     const IntegratorConfig& cfg);

struct HoelderEstimate {
    double eta = 1.0;
    double constant = 0.0;  // running sup of ||A^t(x)-A^t(y)|| / d(x,y)^eta
    double t_used = 0.0;
    int n_pairs = 0;
};

HoelderEstimate estimate_hoelder(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                 const std::vector<std::pair<Vec3, Vec3>>& sample_points,
                                 double eta, double t, const IntegratorConfig& cfg);

/// Empirical fiber-bunching certificate over a sampled set.
struct BunchingReport {
    enum class Form { Flow, Map };

    Form form = Form::Flow;
    double theta = 0.5;
    double eta = 1.0;
    double gamma_star = 0.0;  // smallest gamma certified over samples
    double margin = 0.0;      // -log(gamma_star); positive means verdict true
    bool verdict = false;     // gamma_star < 1
    int n_samples = 0;
    std::vector<double> times;  // t_grid (flow form) or tau list (map form)
    int n_tau_le_1 = 0;  // map form: samples where the tau > 1 transfer hypothesis fails
};

/// Flow form: kappa(x,t) = ||A^t(x)|| ||A^t(x)^{-1}|| theta^{t eta},
/// gamma_star = max kappa^{1/t}. Norms are spectral.
BunchingReport check_bunching_flow(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                   const std::vector<Vec3>& points, double theta, double eta,
                                   const std::vector<double>& t_grid, const IntegratorConfig& cfg);

/// Map form: kappa = ||A_f|| ||A_f^{-1}|| (theta^tau)^eta, gamma_star = max kappa.
BunchingReport check_bunching_map(const std::vector<std::pair<MatX, double>>& pairs, double theta,
                                  double eta);

/// gen with field coefficients shifted by epsilon * R, R a seed-deterministic
/// random trig field with unit coefficient norm. epsilon = 0 returns an
/// identical generator.
CocycleGenerator perturb_generator(const CocycleGenerator& gen, double epsilon,
                                   std::uint64_t seed);

double spectral_norm(const MatX& m);
/// ||m^{-1}||, spectral. Throws SingularMatrix when cond > 1e12.
double inverse_spectral_norm(const MatX& m);

}  // namespace lylab

#endif
