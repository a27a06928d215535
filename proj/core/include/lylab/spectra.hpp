#ifndef LYLAB_SPECTRA_HPP
#define LYLAB_SPECTRA_HPP

#include <vector>

#include "lylab/cocycles.hpp"
#include "lylab/flows.hpp"
#include "lylab/types.hpp"

namespace lylab {

struct LyapunovSpectrum {
    std::vector<double> exponents;    // sorted descending
    std::vector<double> half_widths;  // batch-means confidence half-widths
    double horizon = 0.0;             // total time T or iterate count n
    std::vector<double> gaps;         // consecutive differences, >= 0
    double renorm = 0.0;              // renorm_dt (flow) or renorm_every (map)
    bool nonconvergence = false;
};

/// QR re-orthonormalization estimate of the flow cocycle spectrum. Evolves a
/// full frame under the cocycle, renormalizing every renorm_dt; exponents are
/// time averages of log R-diagonals after the transient. Half-widths come
/// from batch means over 20 equal blocks (2x standard error).
LyapunovSpectrum qr_lyapunov_flow(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                  const Vec3& x0, double T, double renorm_dt, double transient,
                                  const IntegratorConfig& cfg);

/// Exponents per iterate of the ordered product A(f^{n-1}x)...A(x).
LyapunovSpectrum qr_lyapunov_map(const std::vector<MatX>& matrices, int renorm_every = 1);

struct SimplicityVerdict {
    bool simple = false;
    double min_gap = 0.0;
    bool resolved = false;
};

/// simple = (min gap > gap_floor); resolved = min gap exceeds twice the sum
/// of the adjacent half-widths. Unresolved spectra report simple = false.
SimplicityVerdict simplicity_verdict(const LyapunovSpectrum& spec, double gap_floor);

/// Per-exponent relative errors |map_i - mean_tau * flow_i| /
/// max(|mean_tau * flow_i|, floor).
std::vector<double> exponent_relation_check(const LyapunovSpectrum& flow_spec,
                                            const LyapunovSpectrum& map_spec, double mean_tau,
                                            double floor = 1e-3);

/// Removes the exponent closest to zero (the flow-direction exponent) so a
/// dynamical flow spectrum can be compared against a 2x2 return-map spectrum.
LyapunovSpectrum drop_flow_exponent(const LyapunovSpectrum& spec);

struct SplittingSample {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    Vec3 e_s = Vec3::UnitX();
    Vec3 e_flow = Vec3::UnitY();
    Vec3 e_u = Vec3::UnitZ();
    bool ok = true;
};

/// Covariant splitting along one orbit: e_u from the leading forward QR
/// vector, e_s from the leading QR vector of the backward (inverse-matrix)
/// pass, e_flow from the field, all at shared sample points reached after
/// both passes have converged.
std::vector<SplittingSample> covariant_splitting(const VectorFieldSpec& spec, const Vec3& x0,
                                                 double T_forward, double T_backward,
                                                 const IntegratorConfig& cfg, int n_samples = 100,
                                                 double sample_spacing = 0.2,
                                                 double step_dt = 0.05);

struct SingularHyperbolicityReport {
    double theta = 0.0;
    int n_checks = 0;  // sample x t-grid pairs evaluated
    double pass_fraction_domination = 0.0;  // conorm form
    double pass_fraction_contraction = 0.0;
    double pass_fraction_volume = 0.0;
    double pass_fraction_all = 0.0;
    double worst_domination_margin = 0.0;  // max log(ratio / theta^t)
    double worst_contraction_margin = 0.0;
    double worst_volume_margin = 0.0;      // max log(e^{-theta t} / det)
    double theta_min_certified = 0.0;      // smallest theta passing everywhere; >= 1 means none
    double literal_domination_max = 0.0;   // printed-form ||DX|Es|| * ||DX|Ecu||, reported only
};

/// Checks the three singular hyperbolic splitting inequalities (conorm form
/// of domination) at each splitting sample and each t in t_grid, with
/// E^cu = span(e_flow, e_u).
SingularHyperbolicityReport check_singular_hyperbolicity(
    const std::vector<SplittingSample>& samples, const VectorFieldSpec& spec,
    const std::vector<double>& t_grid, double theta, const IntegratorConfig& cfg);

}  // namespace lylab

#endif
