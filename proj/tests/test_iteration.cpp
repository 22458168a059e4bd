#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "cchar/errors.hpp"
#include "cchar/hypersurface.hpp"
#include "support.hpp"

using namespace cchar;
using namespace cchar::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Mat diamond_of(const Mat& a, const Mat& b) { return diamond(trust_symplectic(a), trust_symplectic(b)).matrix(); }

SymplecticPath product_path(std::function<Mat(double)> f, const Tolerances& tol) {
    return SymplecticPath::from_generator(1.0, std::move(f), 17, tol);
}

// γ(t) = exp(tA) exp(t²B), drawn until the spectral radius of γ(1) is at most
// 2 so that twelve iterates stay well conditioned
SymplecticPath random_generator_path(int n, std::mt19937_64& rng, const Tolerances& tol) {
    while (true) {
        const Mat a = standard_j(n) * random_symmetric(2 * n, rng, 2.5);
        const Mat b = standard_j(n) * random_symmetric(2 * n, rng, 1.5);
        auto eval = [a, b](double t) { return Mat((t * a).exp() * (t * t * b).exp()); };
        if (Eigen::EigenSolver<Mat>(eval(1.0)).eigenvalues().cwiseAbs().maxCoeff() <= 2.0)
            return SymplecticPath::from_generator(1.0, eval, 17, tol);
    }
}

}  // namespace

TEST_CASE("splitting numbers at 1 of the basic normal forms") {
    Tolerances tol;
    struct Row {
        double c;
        int s_plus;
    };
    // the endpoint of sheared_turn(c) is conjugate to N1(1, −c)
    for (const Row& r : {Row{-1.0, 1}, Row{1.0, 0}, Row{0.0, 1}, Row{-2.0, 1}, Row{2.0, 0}}) {
        const auto p = product_path([c = r.c](double t) { return sheared_turn(c, t); }, tol);
        const Splitting s = splitting_numbers(p, 1.0, tol);
        CHECK(s.plus == r.s_plus);
        CHECK(s.minus == s.plus);
    }
}

TEST_CASE("splitting numbers vanish away from the spectrum") {
    Tolerances tol;
    const auto p = product_path([](double t) { return sheared_turn(-1.0, t); }, tol);
    const Splitting s = splitting_numbers(p, std::polar(1.0, 0.5), tol);
    CHECK(s.plus == 0);
    CHECK(s.minus == 0);
    const auto h = product_path([](double t) { return form_d(1 + t).matrix(); }, tol);
    CHECK(splitting_numbers(h, 1.0, tol).plus == 0);
}

TEST_CASE("splitting numbers are additive under the diamond product") {
    Tolerances tol;
    for (double c1 : {-1.0, 0.0, 1.0})
        for (double c2 : {-1.0, 0.0, 1.0}) {
            const auto a = product_path([c1](double t) { return sheared_turn(c1, t); }, tol);
            const auto b = product_path([c2](double t) { return sheared_turn(c2, t); }, tol);
            const auto ab = product_path(
                [c1, c2](double t) { return diamond_of(sheared_turn(c1, t), sheared_turn(c2, t)); }, tol);
            const Splitting sa = splitting_numbers(a, 1.0, tol), sb = splitting_numbers(b, 1.0, tol);
            const Splitting sab = splitting_numbers(ab, 1.0, tol);
            CHECK(sab.plus == sa.plus + sb.plus);
            CHECK(sab.minus == sa.minus + sb.minus);
        }
    const auto mixed = product_path(
        [](double t) { return diamond_of(sheared_turn(-1.0, t), form_r(std::sqrt(2.0) * t).matrix()); }, tol);
    CHECK(splitting_numbers(mixed, 1.0, tol).plus == 1);
    const auto hyper = product_path(
        [](double t) { return diamond_of(sheared_turn(1.0, t), form_d(1 + t).matrix()); }, tol);
    CHECK(splitting_numbers(hyper, 1.0, tol).plus == 0);
}

TEST_CASE("splitting numbers are bounded by the nullity") {
    Tolerances tol;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> angle(0.3, 2.8), shear(-2.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        const double th = angle(rng), c = shear(rng);
        const auto p = product_path(
            [th, c](double t) { return diamond_of(sheared_turn(c, t), form_r(th * t).matrix()); }, tol);
        for (Complex w : {Complex(1.0), std::polar(1.0, th)}) {
            const Splitting s = splitting_numbers(p, w, tol);
            const int nu = nullity(p.endpoint(), w, tol);
            CHECK(s.plus >= 0);
            CHECK(s.minus >= 0);
            CHECK(s.plus <= nu);
            CHECK(s.minus <= nu);
        }
    }
}

TEST_CASE("splitting numbers do not depend on the parametrization") {
    Tolerances tol;
    for (double c : {-1.0, 1.0}) {
        const auto p = product_path([c](double t) { return diamond_of(sheared_turn(c, t), form_r(2.0 * t).matrix()); },
                                    tol);
        const auto q = product_path(
            [c](double t) { return diamond_of(sheared_turn(c, t * t), form_r(2.0 * t * t).matrix()); }, tol);
        for (Complex w : {Complex(1.0), std::polar(1.0, 2.0)}) {
            CHECK(splitting_numbers(p, w, tol).plus == splitting_numbers(q, w, tol).plus);
            CHECK(splitting_numbers(p, w, tol).minus == splitting_numbers(q, w, tol).minus);
        }
    }
}

TEST_CASE("nearly coincident eigenvalues are rejected") {
    Tolerances tol;
    const auto p = product_path(
        [](double t) { return diamond_of(form_r(t).matrix(), form_r(t * (1 + 2e-8)).matrix()); }, tol);
    CHECK_THROWS_AS(splitting_numbers(p, std::polar(1.0, 1.0), tol), GapTooSmall);
}

TEST_CASE("iterate indices match the root-of-unity sum on rotation paths") {
    Tolerances tol;
    for (double th : {kPi / 5, std::sqrt(2.0), 2 * kPi * 3 / 7}) {
        const auto p = rotation_path(th, tol);
        IndexProfile prof;
        index_iterates(p, 12, tol, prof);
        for (int m = 1; m <= 12; ++m) {
            CHECK(prof.i_of_m.at(m) == bott_sum_oracle(p, m, tol));
            CHECK(prof.i_of_m.at(m) == omega_index(iterate_path(p, m), 1.0, tol).index);
        }
    }
}

TEST_CASE("iterate indices match the root-of-unity sum on random generator paths") {
    Tolerances tol;
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 2;
        const auto p = random_generator_path(n, rng, tol);
        IndexProfile prof;
        index_iterates(p, 12, tol, prof);
        for (int m = 1; m <= 12; ++m) CHECK(prof.i_of_m.at(m) == bott_sum_oracle(p, m, tol));
        CHECK(prof.i_of_m.at(2) == omega_index(p, 1.0, tol).index + omega_index(p, -1.0, tol).index);
    }
}

TEST_CASE("iterate table agrees with direct iteration beyond the profile depth") {
    Tolerances tol;
    const auto p = product_path(
        [](double t) { return diamond_of(sheared_turn(-2.0, t), form_r(2 * kPi * 0.4 * t).matrix()); }, tol);
    const IterateTable table = IterateTable::from_path(p, tol);
    IndexProfile prof;
    index_iterates(p, 40, tol, prof);
    for (int m = 1; m <= 40; ++m) {
        CHECK(table.index(m) == prof.i_of_m.at(m));
        CHECK(table.nullity(m) == prof.nu_of_m.at(m));
    }
}

TEST_CASE("mean index") {
    Tolerances tol;
    const auto full = build_profile(rotation_path(2 * kPi, tol), 16, tol);
    CHECK(full.mean_index == doctest::Approx(2.0).epsilon(1e-9));
    const auto p = rotation_path(std::sqrt(2.0), tol);
    const double base = mean_index_exact(p, tol);
    CHECK(base == doctest::Approx(std::sqrt(2.0) / kPi).epsilon(1e-9));
    CHECK(mean_index_exact(iterate_path(p, 3), tol) == doctest::Approx(3 * base).epsilon(1e-9));
    const auto prof = build_profile(p, 64, tol);
    CHECK(std::abs(prof.slope - base) <= 2.0 / 64 + tol.fit);
}

TEST_CASE("classification of characteristic-shaped monodromies") {
    Tolerances tol;
    const SymplecticMatrix n11 = form_n1(1.0, 1.0);
    std::vector<AngleVerdict> angles;
    CHECK(classify(diamond(diamond(n11, form_r(std::sqrt(2.0))), form_r(std::sqrt(3.0))), tol, &angles) ==
          OrbitClass::IrrationallyElliptic);
    REQUIRE(angles.size() == 2);
    CHECK_FALSE(angles[0].over_pi.rational);
    CHECK(classify(diamond(n11, form_d(2.0)), tol) == OrbitClass::Hyperbolic);
    CHECK(classify(diamond(n11, form_r(2 * kPi / 5)), tol, &angles) == OrbitClass::Elliptic);
    REQUIRE(angles.size() == 1);
    CHECK(angles[0].over_pi.rational);
    CHECK(angles[0].over_pi.p == 2);
    CHECK(angles[0].over_pi.q == 5);
    CHECK(classify(diamond(diamond(n11, form_r(1.0)), form_d(3.0)), tol) == OrbitClass::NondegenerateOther);
}

TEST_CASE("rationality witnesses") {
    Tolerances tol;
    const Rationality a = rationality(0.4, tol.q_max, tol.rational);
    CHECK(a.rational);
    CHECK(a.p == 2);
    CHECK(a.q == 5);
    const Rationality b = rationality(std::sqrt(2.0) / kPi, tol.q_max, tol.rational);
    CHECK_FALSE(b.rational);
    CHECK(b.q <= tol.q_max);
    CHECK(b.error > tol.rational);
}

TEST_CASE("ellipsoid characteristic profiles satisfy the iteration invariants") {
    Tolerances tol;
    for (const auto& radii : std::vector<std::vector<double>>{{1.0, std::pow(2.0, 0.25)},
                                                              {1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)}}) {
        const int n = static_cast<int>(radii.size());
        for (const auto& c : ellipsoid_characteristics(radii, 1.5, tol)) {
            const auto p = build_profile(c.monodromy_path, 32, tol);
            CHECK(p.i_of_m.at(1) >= n);
            CHECK(2 * p.s_plus >= 2);
            CHECK(p.mean_index > 2);
            CHECK(std::abs(p.mean_index - p.i_of_m.at(32) / 32.0) <= 2.0 * n / 32 + tol.fit);
            const SymplecticMatrix end = c.monodromy();
            for (int m = 1; m <= 32; ++m) {
                CHECK(p.nu_of_m.at(m) == nullity(end.pow(m).matrix(), 1.0, tol));
                if (m < 32) {
                    CHECK(p.i_of_m.at(m) < p.i_of_m.at(m + 1));
                    CHECK(p.i_of_m.at(m) + p.nu_of_m.at(m) <= p.i_of_m.at(m + 1) - 1 + p.elliptic_height / 2);
                }
            }
        }
    }
}

TEST_CASE("strongly hyperbolic profiles fall back to the root-of-unity table past the growth cap") {
    Tolerances tol;
    const auto p = product_path(
        [](double t) {
            return diamond_of(sheared_turn(-1.0, 2 * t), form_r(2 * kPi * t).matrix() * form_d(1 + t).matrix());
        },
        tol);
    const IndexProfile prof = build_profile(p, 32, tol);
    CHECK(prof.direct_depth >= 1);
    CHECK(prof.direct_depth <= static_cast<int>(std::log(tol.growth) / std::log(2.0)));
    CHECK(prof.m_max == 32);
    for (int m : {1, 5, prof.direct_depth + 1, 24, 32}) {
        CHECK(prof.i_of_m.at(m) == bott_sum_oracle(p, m, tol));
        CHECK(prof.nu_of_m.at(m) == 1);
    }
    CHECK(prof.classification == OrbitClass::Hyperbolic);
}
