#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "filigeo/metric.hpp"

using namespace filigeo;

namespace {

Vec pt2(double x, double y) { return (Vec(2) << x, y).finished(); }
Vec pt3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

// Independent finite-difference oracle: Christoffel symbols built from
// central differences of the metric components alone.
std::vector<Mat> christoffel_fd(const PiecewiseMetric& m, const Vec& x, Side side,
                                double h) {
    const int n = m.dim;
    std::vector<Mat> dg(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Mat gp = eval_metric(m, xp, side).g;
        const Mat gm = eval_metric(m, xm, side).g;
        dg[k] = (gp - gm) / (2 * h);
    }
    const Mat ginv = eval_metric(m, x, side).g.inverse();
    std::vector<Mat> gamma(n, Mat::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double acc = 0;
                for (int l = 0; l < n; ++l)
                    acc += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
                gamma[i](j, k) = 0.5 * acc;
            }
    return gamma;
}

}  // namespace

TEST_CASE("hw_riemannian evaluates the published components") {
    auto m = hw_riemannian(1.5);
    auto s = eval_metric(m, pt2(0.5, 0.0));
    CHECK(s.g(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    // 1 - 0.5^1.5 by direct substitution
    CHECK(s.g(1, 1) == doctest::Approx(1.0 - std::pow(0.5, 1.5)).epsilon(1e-15));
    CHECK(s.g(1, 1) == doctest::Approx(0.6464466094067263).epsilon(1e-12));
    CHECK(s.g(0, 1) == 0.0);
    CHECK(s.side == Side::plus);

    // Both branches give the identity at the interface.
    auto sp = eval_metric(m, pt2(0.0, 3.0), Side::plus);
    auto sm = eval_metric(m, pt2(0.0, 3.0), Side::minus);
    CHECK((sp.g - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK((sm.g - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(sp.side == Side::on_interface);
}

TEST_CASE("hw parameter domain is (1,2)") {
    CHECK_THROWS_AS(hw_riemannian(1.0), BadParameter);
    CHECK_THROWS_AS(hw_riemannian(2.0), BadParameter);
    CHECK_THROWS_AS(hw_riemannian(0.5), BadParameter);
    CHECK_THROWS_AS(hw_lorentzian(0.5), BadParameter);
    CHECK_THROWS_AS(hw_lorentzian(2.3), BadParameter);
    CHECK_THROWS_AS(bubble(1.5), BadParameter);
    CHECK_THROWS_AS(bubble(0.0), BadParameter);
}

TEST_CASE("hw metrics report their Hoelder class") {
    CHECK(hw_riemannian(1.5).regularity == "C^{1,0.5}");
    CHECK(hw_riemannian(1.5).c1_across_interface);
    CHECK(bubble(0.5).regularity == "C^{0,0.5}");
    CHECK_FALSE(bubble(0.5).c1_across_interface);
}

TEST_CASE("hw_lorentzian components") {
    auto m = hw_lorentzian(1.5);
    auto s0 = eval_metric(m, pt3(0, 0, 0), Side::plus);
    Mat expect = Vec(pt3(-1, 1, 1)).asDiagonal();
    CHECK((s0.g - expect).norm() == 0.0);

    auto s = eval_metric(m, pt3(0, 0.5, 0));
    CHECK(s.g(0, 0) == -1.0);
    CHECK(s.g(1, 1) == 1.0);
    CHECK(s.g(2, 2) == doctest::Approx(0.6464466094067263).epsilon(1e-12));
}

TEST_CASE("bubble metric matches direct substitution") {
    auto m = bubble(0.5);
    auto s0 = eval_metric(m, pt2(0.0, 7.0), Side::plus);
    CHECK(s0.g(0, 0) == -1.0);
    CHECK(s0.g(0, 1) == -1.0);
    CHECK(s0.g(1, 0) == -1.0);
    CHECK(s0.g(1, 1) == 0.0);

    auto s = eval_metric(m, pt2(0.25, 0.0));
    const double a = std::sqrt(0.25);
    CHECK(s.g(1, 1) == doctest::Approx(a * (2 - a)).epsilon(1e-15));
    CHECK(s.g(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(s.g.determinant() == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("domain walls are hard") {
    auto m = hw_riemannian(1.5);
    CHECK_THROWS_AS(eval_metric(m, pt2(1.0, 0.0)), OutsideDomain);
    CHECK_THROWS_AS(eval_metric(m, pt2(-1.2, 0.0)), OutsideDomain);
    auto b = bubble(0.5);
    CHECK_THROWS_AS(eval_metric(b, pt2(1.01, 0.0)), OutsideDomain);
}

TEST_CASE("glue continuity at 1000 random interface points") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    auto hw = hw_riemannian(1.7);
    auto hwl = hw_lorentzian(1.3);
    auto bb = bubble(0.5);
    for (int i = 0; i < 1000; ++i) {
        {
            Vec x = pt2(0.0, u(rng));
            auto gp = eval_metric(hw, x, Side::plus).g;
            auto gm = eval_metric(hw, x, Side::minus).g;
            CHECK((gp - gm).lpNorm<Eigen::Infinity>() < kGlueTol);
        }
        {
            Vec x = pt3(u(rng), 0.0, u(rng));
            auto gp = eval_metric(hwl, x, Side::plus).g;
            auto gm = eval_metric(hwl, x, Side::minus).g;
            CHECK((gp - gm).lpNorm<Eigen::Infinity>() < kGlueTol);
        }
        {
            Vec x = pt2(0.0, u(rng));
            auto gp = eval_metric(bb, x, Side::plus).g;
            auto gm = eval_metric(bb, x, Side::minus).g;
            CHECK((gp - gm).lpNorm<Eigen::Infinity>() < kGlueTol);
        }
    }
}

TEST_CASE("signature is stable at 1000 random domain points") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-0.95, 0.95);
    std::uniform_real_distribution<double> uy(-5.0, 5.0);
    auto hw = hw_riemannian(1.5);
    auto hwl = hw_lorentzian(1.5);
    auto bb = bubble(0.5);
    for (int i = 0; i < 1000; ++i) {
        // eval_metric itself throws SignatureViolation on a sign-pattern defect
        CHECK_NOTHROW(eval_metric(hw, pt2(ux(rng), uy(rng))));
        CHECK_NOTHROW(eval_metric(hwl, pt3(uy(rng), ux(rng), uy(rng))));
        CHECK_NOTHROW(eval_metric(bb, pt2(ux(rng), uy(rng))));
    }
}

TEST_CASE("christoffel: HW x-equation coefficient") {
    const double lambda = 1.5;
    auto m = hw_riemannian(lambda);
    for (double x : {0.5, -0.5, 0.25, -0.8}) {
        auto gamma = christoffel(m, pt2(x, 0.0), x > 0 ? Side::plus : Side::minus);
        const double expect =
            0.5 * lambda * std::pow(std::abs(x), lambda - 1.0) * (x > 0 ? 1 : -1);
        CHECK(gamma[0](1, 1) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("christoffel: flat metric vanishes") {
    auto m = flat(3);
    auto gamma = christoffel(m, pt3(0.3, -4.0, 2.0), Side::plus);
    for (int i = 0; i < 3; ++i) CHECK(gamma[i].norm() == 0.0);
}

TEST_CASE("christoffel matches the finite-difference oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.05, 0.9);
    std::uniform_real_distribution<double> uy(-3.0, 3.0);
    auto hw = hw_riemannian(1.5);
    auto bb = bubble(0.5);
    for (int i = 0; i < 40; ++i) {
        for (double sgn : {1.0, -1.0}) {
            const Side side = sgn > 0 ? Side::plus : Side::minus;
            {
                Vec x = pt2(sgn * ux(rng), uy(rng));
                auto ga = christoffel(hw, x, side);
                auto gf = christoffel_fd(hw, x, side, 1e-6);
                for (int c = 0; c < 2; ++c)
                    CHECK((ga[c] - gf[c]).lpNorm<Eigen::Infinity>() < 1e-5);
            }
            {
                Vec x = pt2(sgn * (0.1 + 0.8 * ux(rng)), uy(rng));
                auto ga = christoffel(bb, x, side);
                auto gf = christoffel_fd(bb, x, side, 1e-6);
                for (int c = 0; c < 2; ++c)
                    CHECK((ga[c] - gf[c]).lpNorm<Eigen::Infinity>() < 1e-5);
            }
        }
    }
}

TEST_CASE("christoffel symmetry in the lower indices is exact") {
    auto m = hw_lorentzian(1.4);
    auto gamma = christoffel(m, pt3(0.2, 0.37, -1.0), Side::plus);
    for (int i = 0; i < 3; ++i) CHECK((gamma[i] - gamma[i].transpose()).norm() == 0.0);
}

TEST_CASE("metric descriptor round-trips") {
    for (const auto& m : {hw_riemannian(1.5), hw_lorentzian(1.25), bubble(0.5),
                          lipschitz_corner(), flat(2), flat(3, Signature::lorentzian)}) {
        auto desc = metric_descriptor(m);
        CHECK(desc.contains("name"));
        CHECK(desc.contains("params"));
        CHECK(desc.contains("dim"));
        CHECK(desc.contains("signature"));
        CHECK(desc.contains("regularity"));
        auto back = metric_from_descriptor(desc);
        CHECK(metric_descriptor(back) == desc);
    }
}

TEST_CASE("a wrong declared signature raises SignatureViolation") {
    PiecewiseMetric m = flat(2);
    m.signature = Signature::lorentzian;  // identity branches cannot satisfy this
    CHECK_THROWS_AS(eval_metric(m, pt2(0.1, 0.2)), SignatureViolation);

    PiecewiseMetric m2 = flat(2, Signature::lorentzian);
    m2.signature = Signature::riemannian;
    CHECK_THROWS_AS(eval_metric(m2, pt2(0.1, 0.2)), SignatureViolation);
}

TEST_CASE("lipschitz corner metric") {
    auto m = lipschitz_corner();
    auto s = eval_metric(m, pt2(0.5, 0.0));
    CHECK(s.g(1, 1) == doctest::Approx(1.5).epsilon(1e-15));
    auto gamma_p = christoffel(m, pt2(0.0, 0.0), Side::plus);
    auto gamma_m = christoffel(m, pt2(0.0, 0.0), Side::minus);
    CHECK(gamma_p[0](1, 1) == doctest::Approx(-0.5));
    CHECK(gamma_m[0](1, 1) == doctest::Approx(0.5));
}
