#ifndef LYLAB_SECTIONS_HPP
#define LYLAB_SECTIONS_HPP

#include <iosfwd>
#include <vector>

#include "lylab/flows.hpp"
#include "lylab/types.hpp"

namespace lylab {

struct SectionBounds {
    double u1_min = -1.0, u1_max = 1.0;
    double u2_min = -1.0, u2_max = 1.0;

    bool contains(const Vec2& u) const {
        return u[0] >= u1_min && u[0] <= u1_max && u[1] >= u2_min && u[1] <= u2_max;
    }
};

/// A planar cross-section with an orthonormal in-plane frame (u1, u2),
/// a crossing direction, and an exclusion band around the singular line
/// Gamma (approximated by the line u1 == gamma_center in section coords).
struct CrossSection {
    Vec3 base = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 u1 = Vec3::UnitX();
    Vec3 u2 = Vec3::UnitY();
    SectionBounds bounds;
    int direction = -1;  // sign of (field . normal) at accepted crossings; 0 = both
    double gamma_center = 0.0;
    double gamma_band_halfwidth = 1e-4;
    bool uniform_crossing = false;  // field . normal had constant sign on the check grid

    Vec3 embed(const Vec2& u) const { return base + u[0] * u1 + u[1] * u2; }
    Vec2 project(const Vec3& p) const { return {(p - base).dot(u1), (p - base).dot(u2)}; }
    double offset(const Vec3& p) const { return (p - base).dot(normal); }
    bool in_gamma_band(const Vec2& u) const {
        return std::abs(u[0] - gamma_center) < gamma_band_halfwidth;
    }

    /// Builds the section and verifies transversality of the field on a grid
    /// over the bounded rectangle (|field . normal| bounded away from zero at
    /// sampled points away from the zero set). Throws ConfigError if the
    /// frame is not orthonormal.
    static CrossSection make(const VectorFieldSpec& spec, const Vec3& base, const Vec3& normal,
                             const Vec3& u1_hint, const SectionBounds& bounds, int direction,
                             double gamma_center = 0.0, double gamma_band_halfwidth = 1e-4);

    /// The classical Lorenz section: plane z = r - 1, |u1| <= 20, |u2| <= 25,
    /// crossings with decreasing z.
    static CrossSection lorenz_classic(const VectorFieldSpec& spec);
};

struct Crossing {
    double t = 0.0;
    Vec3 p = Vec3::Zero();
    bool grazing = false;
};

/// Locates crossings of the section plane along a dense trajectory, in the
/// requested direction (+1, -1, or 0 for both), to |time error| < 1e-10.
std::vector<Crossing> detect_crossing(const Trajectory& traj, const CrossSection& sec,
                                      int direction);

struct ReturnSample {
    Vec2 x = Vec2::Zero();
    Vec2 fx = Vec2::Zero();
    double tau = 0.0;
    Mat2 d_return = Mat2::Identity();
    bool censored = false;
};

/// Derivative of the return map in section coordinates: embeds section
/// tangent vectors, applies DX^tau, and projects back onto the section plane
/// along the flow direction at the return point.
Mat2 return_derivative(const VectorFieldSpec& spec, const CrossSection& sec,
                       const Vec2& return_point, const Mat3& dx_tau);

/// One Poincare return from section point x: integrates flow + variational
/// matrix until the first transversal crossing with t >= tau_min. Censored
/// when no return occurs by tau_max, the return lands in the Gamma band or
/// outside the section bounds, or the crossing is grazing.
ReturnSample poincare_return(const VectorFieldSpec& spec, const CrossSection& sec, const Vec2& x,
                             const IntegratorConfig& cfg, double tau_min = 0.05,
                             double tau_max = 50.0);

/// Consecutive returns along one orbit, re-embedding each image. Stops early
/// when a return is censored (the censored sample is included).
std::vector<ReturnSample> sample_returns(const VectorFieldSpec& spec, const CrossSection& sec,
                                         const Vec2& x0, int n_returns,
                                         const IntegratorConfig& cfg, double tau_min = 0.05,
                                         double tau_max = 50.0);

/// Per-sample stable/unstable directions on the section, obtained by
/// intersecting span(e_s, e_flow) resp. span(e_u, e_flow) with the section
/// plane (the 3D covariant vectors come from spectra::covariant_splitting).
struct SectionDirections {
    Vec2 es_x = Vec2::UnitY();
    Vec2 eu_x = Vec2::UnitX();
    Vec2 es_fx = Vec2::UnitY();
    Vec2 eu_fx = Vec2::UnitX();
};

/// Projects a 3D direction into the section plane along the flow direction
/// and returns unit section coordinates.
Vec2 project_direction_to_section(const CrossSection& sec, const Vec3& dir, const Vec3& flow_dir);

struct HyperbolicityReport {
    int n_used = 0;
    double theta = 0.0;
    double frac_contracting = 0.0;   // fraction with ||Df|Es|| < theta
    double frac_expanding = 0.0;     // fraction with ||Df|Eu|| > 1/theta
    double worst_contract_margin = 0.0;  // max log(rate/theta); negative = all pass
    double worst_expand_margin = 0.0;    // max log((1/theta)/rate); negative = all pass
    double theta_fit = 0.0;  // exp(slope) of log contraction rate vs tau
};

HyperbolicityReport hyperbolicity_report(const std::vector<ReturnSample>& samples,
                                         const std::vector<SectionDirections>& dirs,
                                         double theta);

/// One-dimensional stable-quotient data: pairs (xi, h(xi)) sorted by xi with
/// a single discontinuity at the Gamma coordinate.
struct QuotientData {
    std::vector<double> xi;
    std::vector<double> h;
    double gamma_xi = 0.0;
    Vec2 transverse_axis = Vec2::UnitX();

    /// Piecewise-linear evaluation on the side of gamma_xi containing x.
    double eval(double x) const;
};

QuotientData stable_projection(const std::vector<ReturnSample>& samples,
                               const std::vector<Vec2>& stable_dirs, double gamma_center);

struct ReturnMapStats {
    int n_samples = 0;
    double mean_tau = 0.0;
    double min_tau = 0.0;
    double max_tau = 0.0;
    int censored_count = 0;
};

ReturnMapStats return_time_stats(const std::vector<ReturnSample>& samples);

struct BandCoverDiagnostic {
    std::vector<bool> interval_covers_some_element;
    double cover_fraction = 0.0;
};

/// Markov-like covering diagnostic: for each partition interval, does the
/// image of its sampled points span some full partition element up to
/// resolution eps_cover?
BandCoverDiagnostic band_cover_check(const QuotientData& quotient,
                                     const std::vector<std::pair<double, double>>& partition,
                                     double eps_cover);

/// CSV with header x1,x2,fx1,fx2,tau,d11,d12,d21,d22,censored.
void write_samples_csv(std::ostream& os, const std::vector<ReturnSample>& samples);

}  // namespace lylab

#endif
