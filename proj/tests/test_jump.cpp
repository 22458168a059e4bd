#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cchar/errors.hpp"
#include "cchar/hypersurface.hpp"
#include "cchar/jump.hpp"
#include "support.hpp"

using namespace cchar;

namespace {

struct Certified {
    std::vector<IndexProfile> profiles;
    std::vector<OrbitSummary> summaries;
    std::vector<IndexOracle> oracles;
};

Certified prepare(const std::vector<double>& r, const Tolerances& tol) {
    Certified c;
    const auto cs = ellipsoid_characteristics(r, 1.5, tol);
    for (const auto& x : cs) c.profiles.push_back(build_profile(x.monodromy_path, 32, tol));
    for (std::size_t j = 0; j < cs.size(); ++j) {
        c.summaries.push_back(summarize(c.profiles[j], cs[j].label, cs[j].symmetric_orbit, cs[j].action, tol));
        c.oracles.push_back(IndexOracle{&*c.profiles[j].table});
    }
    return c;
}

// closed-form iteration indices of the j-th planar circle of E(r):
// i(y,m) = 2m − 1 + Σ_{k≠j} (2⌈mρ_k⌉ − 1), ν(y,m) = 1 + 2#{k : mρ_k ∈ Z}, ρ_k = r_j²/r_k²
std::pair<long, long> ellipsoid_index(const std::vector<double>& r, int j, long m) {
    long i = 2 * m - 1, nu = 1;
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (static_cast<int>(k) == j) continue;
        const double x = m * r[j] * r[j] / (r[k] * r[k]);
        const double c = std::ceil(x);
        const bool integral = std::abs(x - std::round(x)) < 1e-9;
        i += 2 * static_cast<long>(integral ? std::round(x) : c) - 1;
        nu += integral ? 2 : 0;
    }
    return {i, nu};
}

// brute-force scan over T and both candidate m per orbit with the closed-form indices
std::vector<long> oracle_tuples(const std::vector<double>& r, int count) {
    const int n = static_cast<int>(r.size());
    std::vector<double> mean(n);
    for (int j = 0; j < n; ++j) {
        mean[j] = 2;
        for (int k = 0; k < n; ++k)
            if (k != j) mean[j] += 2 * r[j] * r[j] / (r[k] * r[k]);
    }
    std::vector<long> out;
    for (long T = 1; static_cast<int>(out.size()) < count; ++T) {
        bool all = true;
        for (int j = 0; j < n && all; ++j) {
            const auto [i1, nu1] = ellipsoid_index(r, j, 1);
            bool any = false;
            for (int chi : {0, 1}) {
                const long m = static_cast<long>(std::floor(T / mean[j])) + chi;
                if (m < 1) continue;
                const auto [a, an] = ellipsoid_index(r, j, 2 * m - 1);
                const auto [b, bn] = ellipsoid_index(r, j, 2 * m);
                const auto [c, cn] = ellipsoid_index(r, j, 2 * m + 1);
                // S⁺ = 1 and e = 2n for these circles
                any = any || (an == nu1 && b >= 2 * T - n && b + bn <= 2 * T + n - 1 && c == 2 * T + i1 &&
                              a + an == 2 * T - (i1 + 2 - nu1));
                (void)cn;
            }
            all = any;
        }
        if (all) out.push_back(T);
    }
    return out;
}

}  // namespace

TEST_CASE("closed-form index oracle agrees with the computed profiles") {
    Tolerances tol;
    const std::vector<double> r{1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)};
    const Certified c = prepare(r, tol);
    for (int j = 0; j < 3; ++j)
        for (long m : {1L, 2L, 7L, 31L, 500L, 4321L}) {
            CHECK(c.oracles[j].index(m) == ellipsoid_index(r, j, m).first);
            CHECK(c.oracles[j].nullity(m) == ellipsoid_index(r, j, m).second);
        }
}

TEST_CASE("jump tuples on E(1, 2^(1/4))") {
    Tolerances tol;
    const std::vector<double> r{1.0, std::pow(2.0, 0.25)};
    const Certified c = prepare(r, tol);
    const JumpCertificate cert = certify(c.summaries, c.oracles, 100000);
    REQUIRE(cert.tuples.size() == 3);
    const std::vector<long> expect = oracle_tuples(r, 3);
    CHECK(expect == std::vector<long>{10, 24, 34});
    for (int k = 0; k < 3; ++k) CHECK(cert.tuples[k].T == expect[k]);
    CHECK(cert.tuples[0].m == std::vector<long>{3, 2});
    for (const auto& t : cert.tuples) {
        for (const auto& l : t.jump_ledger) CHECK(l.pass);
        for (const auto& l : t.derived_ledger) CHECK(l.pass);
        CHECK_FALSE(t.derived_ledger.empty());
    }
    CHECK(cert.nonhyperbolic.guaranteed >= 1);
    CHECK(cert.nonhyperbolic.classified_nonhyperbolic >= 1);
    CHECK(cert.elliptic.elliptic_lower_bound == 2);
    CHECK(cert.elliptic.classified_elliptic == 2);
    CHECK(cert.pass);
}

TEST_CASE("jump tuples on E(1, 2^(1/4), 3^(1/4))") {
    Tolerances tol;
    const std::vector<double> r{1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)};
    const Certified c = prepare(r, tol);
    const JumpCertificate cert = certify(c.summaries, c.oracles, 100000);
    REQUIRE(cert.tuples.size() == 3);
    const std::vector<long> expect = oracle_tuples(r, 3);
    CHECK(expect == std::vector<long>{32, 174, 388});
    for (int k = 0; k < 3; ++k) CHECK(cert.tuples[k].T == expect[k]);
    CHECK(cert.tuples[0].m == std::vector<long>{7, 5, 4});
    CHECK(cert.nonhyperbolic.guaranteed >= 2);
    const auto& a = *cert.nonhyperbolic.worst;
    CHECK(2 * a.theta1 + a.theta2 + a.theta3 == 3);
    for (const auto& s : cert.summaries) CHECK(s.classification == OrbitClass::IrrationallyElliptic);
    CHECK(cert.elliptic.elliptic_lower_bound == 2);
    CHECK(cert.pass);
}

TEST_CASE("rational mean index reaches 2T exactly") {
    Tolerances tol;
    const Certified c = prepare({1.0, 1.3}, tol);
    const JumpCertificate cert = certify(c.summaries, c.oracles, 100000);
    CHECK(cert.M == 50);
    REQUIRE(cert.tuples.size() == 3);
    CHECK(cert.tuples[0].T == 26900);
    CHECK(cert.tuples[0].m == std::vector<long>{8450, 5000});
    const auto& s = cert.summaries[1];
    REQUIRE(s.mean_rational.rational);
    for (const auto& t : cert.tuples) CHECK(2 * t.m[1] * s.mean_rational.p == 2 * t.T * s.mean_rational.q);
    CHECK(cert.pass);
}

TEST_CASE("scan order is stable under a larger T cap") {
    Tolerances tol;
    const Certified c = prepare({1.0, std::pow(2.0, 0.25)}, tol);
    const auto a = find_jump_tuples(c.summaries, c.oracles, 1, 50, 1);
    const auto b = find_jump_tuples(c.summaries, c.oracles, 1, 5000, 1);
    CHECK(a.front().T == b.front().T);
    CHECK(a.front().m == b.front().m);
}

TEST_CASE("too small a T cap reports the nearest miss") {
    Tolerances tol;
    const Certified c = prepare({1.0, std::pow(2.0, 0.25)}, tol);
    try {
        find_jump_tuples(c.summaries, c.oracles, 1, 5, 3);
        FAIL("expected NoTupleFound");
    } catch (const NoTupleFound& e) {
        CHECK(std::string(e.what()).find("nearest miss") != std::string::npos);
    }
}

TEST_CASE("summary invariants name the violated inequality") {
    OrbitSummary s;
    s.label = "z";
    s.n = 2;
    s.i1 = 1;
    s.nu1 = 1;
    s.s_plus = 1;
    s.mean_index = 3;
    try {
        validate_summary(s);
        FAIL("expected InvariantViolation");
    } catch (const InvariantViolation& e) {
        CHECK(std::string(e.what()).find("index-at-least-n") != std::string::npos);
    }
    s.i1 = 2;
    s.mean_index = 1.5;
    CHECK_THROWS_AS(validate_summary(s), InvariantViolation);
    s.mean_index = 3;
    s.symmetric = true;
    s.nu1 = 3;
    s.s_plus = 1;
    CHECK_THROWS_AS(validate_summary(s), InvariantViolation);
}

TEST_CASE("an all-hyperbolic orbit set cannot be certified") {
    Tolerances tol;
    // two turns with a shear ⋄ one turn carrying a positive hyperbolic block
    const auto path = SymplecticPath::from_generator(
        1.0,
        [](double t) {
            const Mat a = testing::sheared_turn(-1.0, 2 * t);
            const Mat b = form_r(2 * std::numbers::pi * t).matrix() * form_d(1 + t).matrix();
            return diamond(trust_symplectic(a), trust_symplectic(b)).matrix();
        },
        33, tol);
    IndexProfile p = build_profile(path, 32, tol);
    REQUIRE(p.classification == OrbitClass::Hyperbolic);
    std::vector<OrbitSummary> summaries{summarize(p, "h1", false, std::nullopt, tol)};
    std::vector<IndexOracle> oracles{IndexOracle{&*p.table}};
    bool certified = false;
    try {
        certified = certify(summaries, oracles, 20000).pass;
    } catch (const AssignmentInfeasible&) {
    } catch (const NoTupleFound&) {
    } catch (const LedgerFailure&) {
    }
    CHECK_FALSE(certified);
}

TEST_CASE("elliptic bound bookkeeping") {
    OrbitSummary s;
    s.n = 2;
    s.i1 = 2;
    s.nu1 = 1;
    s.s_plus = 1;
    s.symmetric = true;
    s.classification = OrbitClass::Elliptic;
    const EllipticBound b = rho_n_and_elliptic_bound({s, s}, 2);
    CHECK(b.rho_n == 2);
    CHECK(b.k == 2);
    CHECK(b.elliptic_lower_bound == 2);
    OrbitSummary t = s;
    t.symmetric = false;
    const EllipticBound c = rho_n_and_elliptic_bound({s, t}, 2);
    CHECK(c.k == 3);
    CHECK(c.elliptic_lower_bound == 2);
    CHECK(rho_n_and_elliptic_bound({s, t, t}, 2).elliptic_lower_bound == 0);
}

TEST_CASE("certificate JSON and text") {
    Tolerances tol;
    const Certified c = prepare({1.0, std::pow(2.0, 0.25)}, tol);
    const JumpCertificate cert = certify(c.summaries, c.oracles, 1000);
    const nlohmann::json j = cert;
    CHECK(j.at("tuples").size() == 3);
    CHECK(j.at("tuples")[0].at("jump_ledger")[0].contains("verdict"));
    CHECK(j.at("nonhyperbolic").at("pass") == true);
    const std::string text = render_text(cert);
    CHECK(text.find("ASSUMPTIONS") == 0);
    CHECK(text.find("CERTIFICATE PASS") != std::string::npos);
}
