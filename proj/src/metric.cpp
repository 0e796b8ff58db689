#include "filigeo/metric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace filigeo {

namespace {

// Sign-pattern test via leading principal minors (Sylvester) for n <= 3,
// eigensolver otherwise.  Hot path: called on every metric evaluation.
void check_signature(const Mat& g, Signature sig, const Vec& x) {
    const int n = static_cast<int>(g.rows());
    bool ok = false;
    if (n == 2) {
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        if (sig == Signature::riemannian)
            ok = det > 0 && g(0, 0) > 0;
        else
            ok = det < 0;  // symmetric 2x2 with det<0 has signature (-,+)
    } else if (n == 3) {
        const double d1 = g(0, 0);
        const double d2 = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        const double d3 = g.determinant();
        if (sig == Signature::riemannian) {
            ok = d1 > 0 && d2 > 0 && d3 > 0;
        } else {
            // det<0 gives 1 or 3 negative eigenvalues; exclude the (-,-,-)
            // case, which is exactly -g positive definite
            const bool neg_def = -d1 > 0 && d2 > 0 && -d3 > 0;
            ok = d3 < 0 && !neg_def;
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
        const Vec& ev = es.eigenvalues();
        int negatives = 0;
        bool degenerate = false;
        for (int i = 0; i < ev.size(); ++i) {
            if (ev[i] < 0) ++negatives;
            if (ev[i] == 0.0) degenerate = true;
        }
        ok = !degenerate && negatives == (sig == Signature::riemannian ? 0 : 1);
    }
    if (!ok) {
        std::ostringstream os;
        os << "eval_metric: eigenvalue sign pattern at x=[" << x.transpose()
           << "] does not match " << to_string(sig);
        throw SignatureViolation(os.str());
    }
}

// One-sided |x|^lambda extended C^1-flat across the interface so that branch
// functions stay evaluable on trial points slightly past {phi=0}.
// s = -1 selects the minus branch, s = +1 the plus branch.
double onesided_pow(double x, double s, double lambda) {
    const double xi = std::max(s * x, 0.0);
    return std::pow(xi, lambda);
}

double onesided_pow_deriv(double x, double s, double lambda) {
    const double xi = std::max(s * x, 0.0);
    if (xi == 0.0 && lambda < 1.0)
        return std::numeric_limits<double>::infinity();  // genuinely unbounded
    return xi == 0.0 ? 0.0 : lambda * std::pow(xi, lambda - 1.0) * s;
}

// Branch pair for a diagonal 2d metric dx^2 + h(x) dy^2 embedded at
// coordinate `xc` of an n-dim metric whose other components are constant
// diag entries `diag`.  h and dh are the one-sided extensions.
PiecewiseMetric::BranchFn diag_branch(int dim, int xc, int yc, Vec diag,
                                      std::function<double(double)> h,
                                      std::function<double(double)> dh) {
    return [=](const Vec& x, Mat& g, std::vector<Mat>& dg) {
        g = diag.asDiagonal();
        g(yc, yc) = h(x[xc]);
        dg.assign(dim, Mat::Zero(dim, dim));
        dg[xc](yc, yc) = dh(x[xc]);
    };
}

}  // namespace

MetricSample eval_metric(const PiecewiseMetric& m, const Vec& x,
                         std::optional<Side> side_hint) {
    if (m.domain && !m.domain(x)) {
        std::ostringstream os;
        os << "eval_metric: x=[" << x.transpose() << "] outside metric domain";
        throw OutsideDomain(os.str());
    }
    const double phi = m.level ? m.level(x) : 1.0;
    Side side;
    if (phi > kOnSurfaceTol)
        side = Side::plus;
    else if (phi < -kOnSurfaceTol)
        side = Side::minus;
    else
        side = side_hint.value_or(Side::plus);

    MetricSample out;
    if (side == Side::minus)
        m.branch_minus(x, out.g, out.dg);
    else
        m.branch_plus(x, out.g, out.dg);
    out.side = std::abs(phi) <= kOnSurfaceTol ? Side::on_interface : side;
    check_signature(out.g, m.signature, x);
    return out;
}

std::vector<Mat> christoffel(const PiecewiseMetric& m, const Vec& x, Side side) {
    MetricSample s = eval_metric(m, x, side);
    const int n = m.dim;
    Eigen::FullPivLU<Mat> lu(s.g);
    if (!lu.isInvertible())
        throw SingularMetric("christoffel: metric not invertible at sample point");
    const Mat ginv = lu.inverse();

    std::vector<Mat> gamma(n, Mat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) {
                double acc = 0;
                for (int l = 0; l < n; ++l)
                    acc += ginv(i, l) *
                           (s.dg[j](l, k) + s.dg[k](l, j) - s.dg[l](j, k));
                gamma[i](j, k) = 0.5 * acc;
                gamma[i](k, j) = gamma[i](j, k);
            }
    return gamma;
}

PiecewiseMetric hw_riemannian(double lambda) {
    if (!(lambda > 1.0 && lambda < 2.0))
        throw BadParameter("hw_riemannian: lambda must lie in (1,2)");
    PiecewiseMetric m;
    m.dim = 2;
    m.signature = Signature::riemannian;
    m.name = "hw";
    m.param_lambda = lambda;
    m.has_lambda = true;
    {
        std::ostringstream os;
        os << "C^{1," << lambda - 1.0 << "}";
        m.regularity = os.str();
    }
    m.c1_across_interface = true;  // |x|^lambda is C^1 for lambda > 1
    m.lipschitz_constant_hint = lambda;
    auto h = [lambda](double s) {
        return [lambda, s](double x) { return 1.0 - onesided_pow(x, s, lambda); };
    };
    auto dh = [lambda](double s) {
        return [lambda, s](double x) { return -onesided_pow_deriv(x, s, lambda); };
    };
    m.branch_minus = diag_branch(2, 0, 1, Vec::Ones(2), h(-1.0), dh(-1.0));
    m.branch_plus = diag_branch(2, 0, 1, Vec::Ones(2), h(1.0), dh(1.0));
    m.level = [](const Vec& x) { return x[0]; };
    m.level_grad = [](const Vec&) { return (Vec(2) << 1, 0).finished(); };
    m.domain = [](const Vec& x) { return std::abs(x[0]) < 1.0; };
    return m;
}

PiecewiseMetric hw_lorentzian(double lambda) {
    if (!(lambda > 1.0 && lambda < 2.0))
        throw BadParameter("hw_lorentzian: lambda must lie in (1,2)");
    PiecewiseMetric m;
    m.dim = 3;
    m.signature = Signature::lorentzian;
    m.name = "hw-lorentzian";
    m.param_lambda = lambda;
    m.has_lambda = true;
    {
        std::ostringstream os;
        os << "C^{1," << lambda - 1.0 << "}";
        m.regularity = os.str();
    }
    m.c1_across_interface = true;
    m.lipschitz_constant_hint = lambda;
    Vec diag(3);
    diag << -1, 1, 1;  // coordinates (t, x, y)
    auto h = [lambda](double s) {
        return [lambda, s](double x) { return 1.0 - onesided_pow(x, s, lambda); };
    };
    auto dh = [lambda](double s) {
        return [lambda, s](double x) { return -onesided_pow_deriv(x, s, lambda); };
    };
    m.branch_minus = diag_branch(3, 1, 2, diag, h(-1.0), dh(-1.0));
    m.branch_plus = diag_branch(3, 1, 2, diag, h(1.0), dh(1.0));
    m.level = [](const Vec& x) { return x[1]; };
    m.level_grad = [](const Vec&) { return (Vec(3) << 0, 1, 0).finished(); };
    m.domain = [](const Vec& x) { return std::abs(x[1]) < 1.0; };
    m.time_axis = [](const Vec&) { return (Vec(3) << 1, 0, 0).finished(); };
    return m;
}

PiecewiseMetric bubble(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw BadParameter("bubble: lambda must lie in (0,1)");
    PiecewiseMetric m;
    m.dim = 2;
    m.signature = Signature::lorentzian;
    m.name = "bubble";
    m.param_lambda = lambda;
    m.has_lambda = true;
    {
        std::ostringstream os;
        os << "C^{0," << lambda << "}";
        m.regularity = os.str();
    }
    m.c1_across_interface = false;
    auto branch = [lambda](double s) {
        return [lambda, s](const Vec& x, Mat& g, std::vector<Mat>& dg) {
            const double u = x[0];
            const double a = onesided_pow(u, s, lambda);       // |u|^lambda
            const double da = onesided_pow_deriv(u, s, lambda);
            g.resize(2, 2);
            g(0, 0) = -1.0;
            g(0, 1) = g(1, 0) = a - 1.0;
            g(1, 1) = a * (2.0 - a);
            dg.assign(2, Mat::Zero(2, 2));
            dg[0](0, 1) = dg[0](1, 0) = da;
            dg[0](1, 1) = 2.0 * da * (1.0 - a);
        };
    };
    m.branch_minus = branch(-1.0);
    m.branch_plus = branch(1.0);
    m.level = [](const Vec& x) { return x[0]; };
    m.level_grad = [](const Vec&) { return (Vec(2) << 1, 0).finished(); };
    m.domain = [](const Vec& x) { return std::abs(x[0]) < 1.0; };
    m.time_axis = [](const Vec&) { return (Vec(2) << 1, 0).finished(); };
    return m;
}

PiecewiseMetric flat(int dim, Signature sig) {
    if (dim < 2) throw BadParameter("flat: dim must be >= 2");
    PiecewiseMetric m;
    m.dim = dim;
    m.signature = sig;
    m.name = sig == Signature::riemannian ? "flat" : "minkowski";
    m.c1_across_interface = true;
    Vec diag = Vec::Ones(dim);
    if (sig == Signature::lorentzian) diag[0] = -1.0;
    auto branch = [dim, diag](const Vec&, Mat& g, std::vector<Mat>& dg) {
        g = diag.asDiagonal();
        dg.assign(dim, Mat::Zero(dim, dim));
    };
    m.branch_minus = branch;
    m.branch_plus = branch;
    // Smooth everywhere: the interface is empty (level never vanishes).
    m.level = [](const Vec&) { return 1.0; };
    m.level_grad = [dim](const Vec&) { return Vec::Zero(dim); };
    m.domain = [](const Vec&) { return true; };
    if (sig == Signature::lorentzian)
        m.time_axis = [dim](const Vec&) {
            Vec t = Vec::Zero(dim);
            t[0] = 1.0;
            return t;
        };
    return m;
}

PiecewiseMetric lipschitz_corner() {
    PiecewiseMetric m;
    m.dim = 2;
    m.signature = Signature::riemannian;
    m.name = "lipschitz-corner";
    m.regularity = "C^{0,1}";
    m.c1_across_interface = false;
    m.lipschitz_constant_hint = 1.0;
    auto h = [](double s) { return [s](double x) { return 1.0 + s * x; }; };
    auto dh = [](double s) { return [s](double) { return s; }; };
    m.branch_minus = diag_branch(2, 0, 1, Vec::Ones(2), h(-1.0), dh(-1.0));
    m.branch_plus = diag_branch(2, 0, 1, Vec::Ones(2), h(1.0), dh(1.0));
    m.level = [](const Vec& x) { return x[0]; };
    m.level_grad = [](const Vec&) { return (Vec(2) << 1, 0).finished(); };
    m.domain = [](const Vec&) { return true; };
    return m;
}

nlohmann::json metric_descriptor(const PiecewiseMetric& m) {
    nlohmann::json params = nlohmann::json::object();
    if (m.has_lambda) params["lambda"] = m.param_lambda;
    return nlohmann::json{{"name", m.name},
                          {"params", params},
                          {"dim", m.dim},
                          {"signature", to_string(m.signature)},
                          {"regularity", m.regularity}};
}

PiecewiseMetric metric_from_descriptor(const nlohmann::json& desc) {
    const std::string name = desc.at("name").get<std::string>();
    const auto& params = desc.at("params");
    if (name == "hw") return hw_riemannian(params.at("lambda").get<double>());
    if (name == "hw-lorentzian")
        return hw_lorentzian(params.at("lambda").get<double>());
    if (name == "bubble") return bubble(params.at("lambda").get<double>());
    if (name == "lipschitz-corner") return lipschitz_corner();
    if (name == "flat") return flat(desc.at("dim").get<int>(), Signature::riemannian);
    if (name == "minkowski")
        return flat(desc.at("dim").get<int>(), Signature::lorentzian);
    throw ManifestError("metric_from_descriptor: unknown metric '" + name + "'");
}

}  // namespace filigeo
