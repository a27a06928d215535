#ifndef LYLAB_FLOWS_HPP
#define LYLAB_FLOWS_HPP

#include <vector>

#include "lylab/integrate.hpp"
#include "lylab/types.hpp"

namespace lylab {

/// Parametrized vector field with an analytic Jacobian. Two kinds:
/// the Lorenz system and the linearized model of a hyperbolic singularity
/// with rates (alpha_ss, alpha_s, alpha_u) on the (x, z, y) axes.
struct VectorFieldSpec {
    enum class Kind { Lorenz, LinearSingularity };

    Kind kind = Kind::Lorenz;
    // Lorenz parameters
    double sigma = 10.0;
    double r = 28.0;
    double b = 8.0 / 3.0;
    // linear singularity rates
    double alpha_ss = -3.0;
    double alpha_s = -1.0;
    double alpha_u = 2.0;

    static VectorFieldSpec lorenz(double sigma = 10.0, double r = 28.0, double b = 8.0 / 3.0);
    static VectorFieldSpec linear_singularity(double alpha_ss, double alpha_s, double alpha_u);

    void validate() const;
};

/// Lorenz: (sigma(y-x), rx - y - xz, xy - bz).
/// LinearSingularity: (alpha_ss x, alpha_u y, alpha_s z).
Vec3 evaluate_field(const VectorFieldSpec& spec, const Vec3& p);

/// Analytic Jacobian of evaluate_field.
Mat3 jacobian_field(const VectorFieldSpec& spec, const Vec3& p);

/// Dense flow trajectory over [0, T].
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec3> points;
    std::vector<DenseSegment> dense_segments;

    Vec3 at(double t) const;
    double t_end() const { return times.back(); }
};

Trajectory integrate_flow(const VectorFieldSpec& spec, const Vec3& x0, double T,
                          const IntegratorConfig& cfg);

/// Co-integrates the variational equation M' = J(X^t x0) M, M(0) = I, in one
/// extended 12-component state. matrix_path[i] = DX^{times[i]}(x0).
struct VariationalResult {
    Trajectory trajectory;
    std::vector<Mat3> matrix_path;
};

VariationalResult integrate_variational(const VectorFieldSpec& spec, const Vec3& x0, double T,
                                        const IntegratorConfig& cfg);

/// Eigenvalues of the Jacobian at the origin, sorted ascending, plus whether
/// the singular hyperbolic ordering alpha_ss < alpha_s < 0 < -alpha_s < alpha_u
/// holds. Throws ComplexSpectrum when the eigenvalues are not all real.
struct SingularityEigen {
    Vec3 eigenvalues;  // ascending
    bool eq_ordering_ok = false;
};

SingularityEigen singularity_eigen(const VectorFieldSpec& spec);

/// Packs/unpacks the extended (state, matrix) representation used by the
/// variational and cocycle integrations.
VecX pack_state_matrix(const Vec3& x, const MatX& m);
void unpack_state_matrix(const VecX& y, Vec3& x, MatX& m);

}  // namespace lylab

#endif
