#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace filigeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Which closed half-domain a branch evaluation refers to.  `on_interface`
// marks states pinned to the level set itself (sliding segments, glue checks).
enum class Side { minus, plus, on_interface };

inline const char* to_string(Side s) {
    switch (s) {
        case Side::minus: return "minus";
        case Side::plus: return "plus";
        default: return "interface";
    }
}

// Coordinate-units tolerance deciding "x lies on the interface".  Must exceed
// the integrator's event-location tolerance.
inline constexpr double kOnSurfaceTol = 1e-10;

// Continuity-of-g tolerance across the interface for zoo metrics.
inline constexpr double kGlueTol = 1e-12;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutsideDomain : Error { using Error::Error; };
struct BadParameter : Error { using Error::Error; };
struct SignatureViolation : Error { using Error::Error; };
struct SingularMetric : Error { using Error::Error; };
struct NotSliding : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NonCausalSegment : Error { using Error::Error; };
struct NotCausallyRelated : Error { using Error::Error; };
struct InterfaceOnCurve : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct ResolutionTooCoarse : Error { using Error::Error; };
struct ManifestError : Error { using Error::Error; };

}  // namespace filigeo
