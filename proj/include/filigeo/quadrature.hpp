#pragma once

#include <functional>

#include "filigeo/core.hpp"

namespace filigeo {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
};

// Adaptive Gauss-Kronrod 7/15 on [a, b].  Bisects until the local Kronrod
// error estimate meets abs_tol + rel_tol*|integral|.  Throws
// QuadratureFailure when the interval stack exceeds max_intervals.
QuadratureResult integrate_gk15(const std::function<double(double)>& f,
                                double a, double b,
                                double abs_tol = 1e-12, double rel_tol = 1e-12,
                                int max_intervals = 4000);

}  // namespace filigeo
