#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cchar/dual_action.hpp"
#include "cchar/errors.hpp"
#include "support.hpp"

using namespace cchar;

namespace {

constexpr double kPi = std::numbers::pi;

double angle_error(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
}

Vec random_point(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = g(rng);
    return x;
}

template <class F>
double directional_error(F f, const Vec& x, const Vec& grad, std::mt19937_64& rng) {
    Vec d = random_point(static_cast<int>(x.size()), rng);
    d.normalize();
    const double h = 1e-5;
    const double fd = (f(x + h * d) - f(x - h * d)) / (2 * h);
    const double an = grad.dot(d);
    return std::abs(fd - an) / std::max(1e-8, std::abs(an));
}

}  // namespace

TEST_CASE("integrated ellipsoid monodromy reproduces the decoupled Floquet multipliers") {
    Tolerances tol;
    for (const auto& r : std::vector<std::vector<double>>{{1.0, std::pow(2.0, 0.25)},
                                                          {1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)}}) {
        const int n = static_cast<int>(r.size());
        const ConvexBody body = ConvexBody::ellipsoid(r);
        const auto closed = ellipsoid_characteristics(r, 1.5, tol);
        for (int j = 0; j < n; ++j) {
            Vec x0 = Vec::Zero(2 * n);
            x0(j) = r[j];
            const auto c = integrate_characteristic(body, 1.5, x0, closed[j].period, tol, "num");
            CHECK(c.action == doctest::Approx(kPi * r[j] * r[j]).epsilon(1e-9));
            CHECK((c.monodromy_path.endpoint() - closed[j].monodromy_path.endpoint()).cwiseAbs().maxCoeff() < 1e-7);
            const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(c.monodromy_path.endpoint()).eigenvalues();
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                for (double sign : {1.0, -1.0}) {
                    const double target = sign * 2 * kPi * r[j] * r[j] / (r[k] * r[k]);
                    double best = 10;
                    for (Eigen::Index i = 0; i < ev.size(); ++i)
                        best = std::min(best, angle_error(std::arg(ev(i)), target));
                    CHECK(best < 1e-7);
                }
            }
            CHECK(nullity(c.monodromy_path.endpoint(), 1.0, tol) >= 1);
            CHECK(c.symmetric_orbit);
        }
    }
}

TEST_CASE("closed-form ellipsoid characteristics") {
    Tolerances tol;
    const std::vector<double> r{1.0, 1.3};
    for (double alpha : {1.2, 1.5, 1.8}) {
        const auto cs = ellipsoid_characteristics(r, alpha, tol);
        REQUIRE(cs.size() == 2);
        CHECK(cs[0].label == "y1");
        CHECK(cs[0].action == doctest::Approx(kPi));
        CHECK(cs[1].action == doctest::Approx(kPi * 1.69));
        CHECK(symplectic_residual(cs[1].monodromy_path.endpoint()) < 1e-12);
    }
    CHECK_THROWS_AS(ellipsoid_characteristics({1.0, 1.0}, 1.5, tol), DegenerateRadii);
}

TEST_CASE("index profiles do not depend on alpha") {
    Tolerances tol;
    const std::vector<double> r{1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)};
    const auto a = ellipsoid_characteristics(r, 1.25, tol);
    const auto b = ellipsoid_characteristics(r, 1.75, tol);
    for (std::size_t j = 0; j < a.size(); ++j) {
        const auto pa = build_profile(a[j].monodromy_path, 16, tol);
        const auto pb = build_profile(b[j].monodromy_path, 16, tol);
        CHECK(pa.i_of_m == pb.i_of_m);
        CHECK(pa.nu_of_m == pb.nu_of_m);
        CHECK(pa.s_plus == pb.s_plus);
        CHECK(pa.mean_index == doctest::Approx(pb.mean_index).epsilon(1e-12));
    }
}

TEST_CASE("Hamiltonian and conjugate gradients match finite differences") {
    Tolerances tol;
    std::mt19937_64 rng(4);
    const double alpha = 1.5;
    for (const ConvexBody& body :
         {ConvexBody::ellipsoid({1.0, 1.3}), ConvexBody::gauge_table({1.0, 1.45, 1.2, 1.8}, 0.2)}) {
        for (int trial = 0; trial < 20; ++trial) {
            const Vec x = random_point(4, rng);
            const auto h = hamiltonian_alpha(body, alpha, x, tol);
            CHECK(directional_error([&](const Vec& y) { return hamiltonian_alpha(body, alpha, y, tol).value; }, x,
                                    h.gradient, rng) <= 1e-5);
            const auto c = fenchel_conjugate(body, alpha, x);
            CHECK(directional_error([&](const Vec& y) { return fenchel_conjugate(body, alpha, y).value; }, x,
                                    c.gradient, rng) <= 1e-5);
            // Fenchel equality at y = ∇H(x)
            CHECK(fenchel_conjugate(body, alpha, h.gradient).value + h.value ==
                  doctest::Approx(x.dot(h.gradient)).epsilon(1e-7));
        }
    }
}

TEST_CASE("gauge functions are positively homogeneous") {
    std::mt19937_64 rng(6);
    const ConvexBody g = ConvexBody::gauge_table({1.0, 2.0, 1.5, 1.0}, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec x = random_point(4, rng);
        CHECK(g.gauge(2.5 * x) == doctest::Approx(2.5 * g.gauge(x)).epsilon(1e-10));
        Vec arg;
        const double pv = g.polar_gauge(x, &arg);
        CHECK(g.gauge(arg) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(arg.dot(x) == doctest::Approx(pv).epsilon(1e-9));
    }
}

TEST_CASE("hypersurface errors") {
    Tolerances tol;
    const ConvexBody body = ConvexBody::ellipsoid({1.0, 1.3});
    CHECK_THROWS_AS(hamiltonian_alpha(body, 1.5, Vec::Zero(4), tol), OriginSingularity);
    Vec x0 = Vec::Zero(4);
    x0(0) = 1.0;
    const auto cs = ellipsoid_characteristics({1.0, 1.3}, 1.5, tol);
    CHECK_THROWS_AS(integrate_characteristic(body, 1.5, x0, 0.9 * cs[0].period, tol, "bad"), InvariantViolation);
    CHECK_THROWS_AS(ConvexBody::ellipsoid({1.0, -1.0}), ConfigError);
    CHECK_THROWS_AS(body_from_json(nlohmann::json{{"kind", "cube"}}), ConfigError);
}

TEST_CASE("trajectory CSV has one row per sample") {
    Tolerances tol;
    const auto cs = ellipsoid_characteristics({1.0, 1.3}, 1.5, tol);
    std::ostringstream os;
    write_trajectory_csv(os, cs[0].trajectory, cs[0].period, 32);
    std::istringstream is(os.str());
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows >= 33);
}
