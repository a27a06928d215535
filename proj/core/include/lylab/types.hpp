#ifndef LYLAB_TYPES_HPP
#define LYLAB_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lylab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Base class for all numerical failures raised by the library.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct StepFailure : NumericalError {
    using NumericalError::NumericalError;
};
struct Divergence : NumericalError {
    using NumericalError::NumericalError;
};
struct ComplexSpectrum : NumericalError {
    using NumericalError::NumericalError;
};
struct OutsideSection : NumericalError {
    using NumericalError::NumericalError;
};
struct DegenerateProjection : NumericalError {
    using NumericalError::NumericalError;
};
struct InsufficientSamples : NumericalError {
    using NumericalError::NumericalError;
};
struct AllCensored : NumericalError {
    using NumericalError::NumericalError;
};
struct FoliationEstimateUnavailable : NumericalError {
    using NumericalError::NumericalError;
};
struct SingularMatrix : NumericalError {
    using NumericalError::NumericalError;
};
struct DimensionMismatch : NumericalError {
    using NumericalError::NumericalError;
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lylab

#endif
