#include "filigeo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace filigeo {

namespace {

// 15-point Kronrod nodes/weights on [-1,1] with the embedded 7-point Gauss
// rule (standard QUADPACK values, symmetric half listed).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Interval {
    double a, b, value, err;
};

Interval gk15(const std::function<double(double)>& f, double a, double b,
              int& evals) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    evals += 15;
    double res_g = fc * kWg[3];
    double res_k = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double x = hl * kXgk[j];
        const double fsum = f(c - x) + f(c + x);
        res_k += kWgk[j] * fsum;
        if (j % 2 == 1) res_g += kWg[j / 2] * fsum;
    }
    res_g *= hl;
    res_k *= hl;
    return {a, b, res_k, std::abs(res_k - res_g)};
}

}  // namespace

QuadratureResult integrate_gk15(const std::function<double(double)>& f,
                                double a, double b, double abs_tol,
                                double rel_tol, int max_intervals) {
    QuadratureResult out;
    if (a == b) return out;
    std::vector<Interval> heap;
    heap.push_back(gk15(f, a, b, out.evaluations));
    auto worse = [](const Interval& p, const Interval& q) { return p.err < q.err; };
    while (true) {
        double total = 0, err = 0;
        for (const auto& iv : heap) {
            total += iv.value;
            err += iv.err;
        }
        if (err <= abs_tol + rel_tol * std::abs(total)) {
            out.value = total;
            out.error_estimate = err;
            return out;
        }
        if (static_cast<int>(heap.size()) >= max_intervals)
            throw QuadratureFailure("integrate_gk15: interval budget exhausted");
        std::pop_heap(heap.begin(), heap.end(), worse);
        Interval bad = heap.back();
        heap.pop_back();
        const double m = 0.5 * (bad.a + bad.b);
        if (!(bad.a < m && m < bad.b))
            throw QuadratureFailure("integrate_gk15: interval underflow");
        heap.push_back(gk15(f, bad.a, m, out.evaluations));
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back(gk15(f, m, bad.b, out.evaluations));
        std::push_heap(heap.begin(), heap.end(), worse);
    }
}

}  // namespace filigeo
