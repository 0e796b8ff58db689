#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "filigeo/core.hpp"

namespace filigeo {

enum class Signature { riemannian, lorentzian };

inline const char* to_string(Signature s) {
    return s == Signature::riemannian ? "riemannian" : "lorentzian";
}

// Metric components and first partials at a point.
//   g      : n x n symmetric matrix
//   dg[k]  : n x n matrix of d g_ij / d x^k
//   side   : which branch produced the values
struct MetricSample {
    Mat g;
    std::vector<Mat> dg;
    Side side = Side::plus;
};

// A semi-Riemannian metric given by two smooth branches glued along the zero
// set of a scalar level function.  Branches must be evaluable up to the
// interface (closed half-domains).  Immutable after construction; evaluation
// is pure and safe to call concurrently.
struct PiecewiseMetric {
    int dim = 2;
    Signature signature = Signature::riemannian;

    // Evaluates components and partials of one branch; dg resized by callee.
    using BranchFn = std::function<void(const Vec& x, Mat& g, std::vector<Mat>& dg)>;
    BranchFn branch_minus;
    BranchFn branch_plus;

    std::function<double(const Vec&)> level;       // phi: <0 minus, >0 plus
    std::function<Vec(const Vec&)> level_grad;     // grad phi, nonzero on {phi=0}
    std::function<bool(const Vec&)> domain;        // hard walls

    // Timelike reference field T for the time orientation (lorentzian only).
    std::function<Vec(const Vec&)> time_axis;

    double lipschitz_constant_hint = 0.0;

    // Descriptor metadata for experiment manifests.
    std::string name = "custom";
    std::string regularity = "C^inf";
    double param_lambda = 0.0;          // 0 when not applicable
    bool has_lambda = false;
    // g and dg both continuous across the interface (safe for classical
    // integration through it, e.g. |x|^lambda with lambda > 1).
    bool c1_across_interface = false;
};

// Branch selection: strict sign of level() away from the interface; within
// kOnSurfaceTol of it the hint decides (plus when absent).  Validates the
// declared eigenvalue sign pattern and domain membership.
MetricSample eval_metric(const PiecewiseMetric& m, const Vec& x,
                         std::optional<Side> side_hint = std::nullopt);

// Gamma[i](j,k) = 1/2 g^{il} (d_j g_lk + d_k g_lj - d_l g_jk).
std::vector<Mat> christoffel(const PiecewiseMetric& m, const Vec& x, Side side);

// --- zoo -------------------------------------------------------------------

// dx^2 + (1-|x|^lambda) dy^2 on (-1,1) x R, 1 < lambda < 2.
PiecewiseMetric hw_riemannian(double lambda);

// -dt^2 + dx^2 + (1-|x|^lambda) dy^2 on R x (-1,1) x R, oriented by d_t.
PiecewiseMetric hw_lorentzian(double lambda);

// -du^2 + 2(|u|^lambda - 1) du dx + |u|^lambda (2-|u|^lambda) dx^2 on
// (-1,1) x R, 0 < lambda < 1, oriented by d_u.
PiecewiseMetric bubble(double lambda);

// Constant diagonal metric (identity, or diag(-1,1,...) when lorentzian).
PiecewiseMetric flat(int dim, Signature sig = Signature::riemannian);

// dx^2 + (1+|x|) dy^2: Lipschitz, C^1-matching test bed.
PiecewiseMetric lipschitz_corner();

// {name, params, dim, signature, regularity} descriptor.
nlohmann::json metric_descriptor(const PiecewiseMetric& m);

// Rebuild a zoo metric from its descriptor.
PiecewiseMetric metric_from_descriptor(const nlohmann::json& desc);

}  // namespace filigeo
