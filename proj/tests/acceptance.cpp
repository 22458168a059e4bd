#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "cchar/dual_action.hpp"
#include "cchar/errors.hpp"
#include "cchar/hypersurface.hpp"
#include "cchar/jump.hpp"
#include "cchar/pipeline.hpp"
#include "support.hpp"

using namespace cchar;
using namespace cchar::testing;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

const std::vector<double> kPair{1.0, std::pow(2.0, 0.25)};
const std::vector<double> kTriple{1.0, std::pow(2.0, 0.25), std::pow(3.0, 0.25)};
const std::vector<double> kRecovery{1.0, 1.3};

Mat diamond_of(const Mat& a, const Mat& b) { return diamond(trust_symplectic(a), trust_symplectic(b)).matrix(); }

double angle_error(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
}

// S⁺ of N1(1, a) at 1 is 1 for a ≥ 0 and 0 for a < 0; sheared_turn(c) ends at a conjugate of N1(1, −c)
Outcome splitting_table() {
    Tolerances tol;
    const std::vector<double> shears{1.0, -1.0, 0.0};  // N1(1,1), N1(1,−1) and I₂ ends: a = 1, −1, 0
    auto expected = [](double a) { return a >= 0 ? 1 : 0; };
    int rows = 0, bad = 0;
    std::ostringstream miss;
    auto check = [&](const SymplecticPath& p, int want, const std::string& label) {
        const Splitting s = splitting_numbers(p, 1.0, tol);
        const Splitting off = splitting_numbers(p, std::polar(1.0, 1.1), tol);
        ++rows;
        if (s.plus != want || s.minus != want || off.plus != 0 || off.minus != 0) {
            ++bad;
            miss << " " << label << "=(" << s.plus << "," << s.minus << ")";
        }
    };
    for (double a : shears) {
        const auto p = SymplecticPath::from_generator(1.0, [a](double t) { return sheared_turn(-a, t); }, 17, tol);
        check(p, expected(a), "N1(1," + std::to_string(static_cast<int>(a)) + ")");
    }
    for (double a : shears)
        for (double b : shears) {
            const auto p = SymplecticPath::from_generator(
                1.0, [a, b](double t) { return diamond_of(sheared_turn(-a, t), sheared_turn(-b, t)); }, 17, tol);
            check(p, expected(a) + expected(b),
                  "N1(1," + std::to_string(static_cast<int>(a)) + ")*N1(1," + std::to_string(static_cast<int>(b)) + ")");
        }
    for (double a : shears)
        for (double b : shears)
            for (double c : shears) {
                const auto p = SymplecticPath::from_generator(
                    1.0,
                    [a, b, c](double t) {
                        return diamond_of(diamond_of(sheared_turn(-a, t), sheared_turn(-b, t)), sheared_turn(-c, t));
                    },
                    17, tol);
                check(p, expected(a) + expected(b) + expected(c), "triple");
            }
    std::ostringstream os;
    os << rows << " endpoints, " << bad << " mismatches" << miss.str();
    return {bad == 0, os.str()};
}

// γ(t) = exp(tA) exp(t²B), drawn until the spectral radius of γ(1) is at most 2
SymplecticPath random_generator_path(int n, std::mt19937_64& rng, const Tolerances& tol) {
    while (true) {
        const Mat a = standard_j(n) * random_symmetric(2 * n, rng, 2.5);
        const Mat b = standard_j(n) * random_symmetric(2 * n, rng, 1.5);
        auto eval = [a, b](double t) { return Mat((t * a).exp() * (t * t * b).exp()); };
        if (Eigen::EigenSolver<Mat>(eval(1.0)).eigenvalues().cwiseAbs().maxCoeff() <= 2.0)
            return SymplecticPath::from_generator(1.0, eval, 17, tol);
    }
}

Outcome bott_equivalence() {
    Tolerances tol;
    std::mt19937_64 rng(20240611);
    int paths = 0, checks = 0, bad = 0;
    for (int n : {1, 2})
        for (int trial = 0; trial < 50; ++trial) {
            const auto p = random_generator_path(n, rng, tol);
            ++paths;
            for (int m = 1; m <= 12; ++m) {
                ++checks;
                if (omega_index(iterate_path(p, m), 1.0, tol).index != bott_sum_oracle(p, m, tol)) ++bad;
            }
        }
    std::ostringstream os;
    os << paths << " paths (50 in Sp(2), 50 in Sp(4)), " << checks << " iterates, " << bad << " mismatches";
    return {bad == 0, os.str()};
}

Outcome index_shift() {
    Tolerances tol;
    int checks = 0, bad = 0, unstable = 0;
    for (const auto& r : {kPair, kTriple}) {
        const int n = static_cast<int>(r.size());
        const ConvexBody body = ConvexBody::ellipsoid(r);
        for (const auto& c : ellipsoid_characteristics(r, 1.5, tol)) {
            const auto prof = build_profile(c.monodromy_path, 16, tol);
            const Loop u8 = loop_from_characteristic(c, body, 1.5, 8, tol);
            const Loop u12 = loop_from_characteristic(c, body, 1.5, 12, tol);
            for (int m = 1; m <= 8; ++m) {
                const MorseData a = morse_data(u8.iterate(m, 1.5), body, 1.5, tol);
                const MorseData b = morse_data(u12.iterate(m, 1.5), body, 1.5, tol);
                ++checks;
                if (a.index != b.index || a.nullity != b.nullity) ++unstable;
                if (a.index != prof.i_of_m.at(m) - n || a.nullity != prof.nu_of_m.at(m)) ++bad;
            }
        }
    }
    std::ostringstream os;
    os << checks << " iterates on n = 2, 3, " << bad << " mismatches, " << unstable
       << " unstable between 8 and 12 modes";
    return {bad == 0 && unstable == 0, os.str()};
}

Outcome floquet() {
    Tolerances tol;
    double worst = 0.0;
    int orbits = 0;
    for (const auto& r : {kPair, kTriple, kRecovery}) {
        const int n = static_cast<int>(r.size());
        const ConvexBody body = ConvexBody::ellipsoid(r);
        const auto closed = ellipsoid_characteristics(r, 1.5, tol);
        for (int j = 0; j < n; ++j) {
            Vec x0 = Vec::Zero(2 * n);
            x0(j) = r[j];
            const auto c = integrate_characteristic(body, 1.5, x0, closed[j].period, tol, "num");
            const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(c.monodromy_path.endpoint()).eigenvalues();
            ++orbits;
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                for (double sign : {1.0, -1.0}) {
                    const double target = sign * 2 * kPi * r[j] * r[j] / (r[k] * r[k]);
                    double best = 10;
                    for (Eigen::Index i = 0; i < ev.size(); ++i)
                        best = std::min(best, angle_error(std::arg(ev(i)), target));
                    worst = std::max(worst, best);
                }
            }
        }
    }
    std::ostringstream os;
    os << orbits << " integrated orbits on 3 bodies, max angle error " << worst;
    return {worst <= 1e-7, os.str()};
}

const std::vector<RunReport>& ellipsoid_reports() {
    static std::vector<RunReport> out;
    if (!out.empty()) return out;
    for (const auto& r : {kPair, kTriple, kRecovery}) {
        nlohmann::json cfg{{"body", {{"kind", "ellipsoid"}, {"radii", r}}}, {"alpha", 1.5}};
        cfg["methods"] = r == kRecovery ? nlohmann::json::array({"closed-form", "dual-action"})
                                        : nlohmann::json::array({"closed-form"});
        cfg["seed"] = 7;
        out.push_back(run_pipeline(config_from_json(cfg)));
    }
    return out;
}

Outcome mean_index_law() {
    int orbits = 0;
    double min_mean = 1e300, worst_spread = 0.0;
    bool ok = true;
    for (const RunReport& rep : ellipsoid_reports()) {
        if (rep.status == "FAILED") return {false, "pipeline stage " + rep.failed_stage + ": " + rep.error};
        double lo = 1e300, hi = -1e300;
        for (const OrbitRow& o : rep.orbits) {
            ++orbits;
            min_mean = std::min(min_mean, o.mean_index);
            ok = ok && o.mean_index > 2;
            lo = std::min(lo, o.mean_index / o.action);
            hi = std::max(hi, o.mean_index / o.action);
        }
        worst_spread = std::max(worst_spread, (hi - lo) / hi);
    }
    std::ostringstream os;
    os << orbits << " orbits on 3 bodies, min mean index " << min_mean << ", max relative spread of mean index/action "
       << worst_spread;
    return {ok && worst_spread <= 1e-4, os.str()};
}

Outcome symmetric_bound() {
    int checked = 0, bad = 0;
    for (const RunReport& rep : ellipsoid_reports()) {
        if (rep.status == "FAILED") return {false, "pipeline stage " + rep.failed_stage + ": " + rep.error};
        const int n = rep.certificate ? rep.certificate->n : 0;
        for (const OrbitRow& o : rep.orbits) {
            if (!o.symmetric) continue;
            ++checked;
            if (o.i1 + 2 * o.s_plus - o.nu1 < n) ++bad;
        }
    }
    std::ostringstream os;
    os << checked << " symmetric orbits, " << bad << " violations";
    return {checked > 0 && bad == 0, os.str()};
}

struct Prepared {
    std::vector<IndexProfile> profiles;
    std::vector<OrbitSummary> summaries;
    std::vector<IndexOracle> oracles;
    JumpCertificate cert;
};

const Prepared& prepare(const std::vector<double>& r) {
    static std::map<std::size_t, Prepared> cache;
    if (auto it = cache.find(r.size()); it != cache.end()) return it->second;
    Tolerances tol;
    Prepared& p = cache[r.size()];
    const auto cs = ellipsoid_characteristics(r, 1.5, tol);
    p.profiles.reserve(cs.size());
    for (const auto& x : cs) p.profiles.push_back(build_profile(x.monodromy_path, 32, tol));
    for (std::size_t j = 0; j < cs.size(); ++j) {
        p.summaries.push_back(summarize(p.profiles[j], cs[j].label, cs[j].symmetric_orbit, cs[j].action, tol));
        p.oracles.push_back(IndexOracle{&*p.profiles[j].table});
    }
    p.cert = certify(p.summaries, p.oracles, 100000);
    return p;
}

Outcome jump_tuples() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : {kPair, kTriple}) {
        const Prepared& p = prepare(r);
        int lines = 0, failing = 0;
        for (const auto& t : p.cert.tuples)
            for (const auto* ledger : {&t.jump_ledger, &t.derived_ledger})
                for (const auto& l : *ledger) {
                    ++lines;
                    failing += l.pass ? 0 : 1;
                }
        os << "n = " << r.size() << ": T =";
        for (const auto& t : p.cert.tuples) os << " " << t.T;
        os << ", " << lines << " ledger lines, " << failing << " failing; ";
        ok = ok && p.cert.tuples.size() >= 3 && failing == 0;
    }
    return {ok, os.str()};
}

bool hyperbolic(OrbitClass c) { return c == OrbitClass::Hyperbolic; }

Outcome nonhyperbolic() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : {kPair, kTriple}) {
        const Prepared& p = prepare(r);
        const int n = static_cast<int>(r.size());
        int classified = 0;
        for (const auto& s : p.summaries) classified += hyperbolic(s.classification) ? 0 : 1;
        os << "n = " << n << ": guaranteed " << p.cert.nonhyperbolic.guaranteed << ", classified non-hyperbolic "
           << classified << "; ";
        ok = ok && p.cert.nonhyperbolic.guaranteed >= n - 1 && classified >= p.cert.nonhyperbolic.guaranteed &&
             p.cert.nonhyperbolic.pass;
    }
    return {ok, os.str()};
}

Outcome elliptic_bound() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : {kPair, kTriple}) {
        const Prepared& p = prepare(r);
        int elliptic = 0;
        for (const auto& s : p.summaries)
            elliptic += (s.classification == OrbitClass::Elliptic ||
                         s.classification == OrbitClass::IrrationallyElliptic)
                            ? 1
                            : 0;
        os << "n = " << r.size() << ": bound " << p.cert.elliptic.elliptic_lower_bound << ", classified elliptic "
           << elliptic << "; ";
        ok = ok && p.cert.elliptic.elliptic_lower_bound == 2 && elliptic >= 2;
    }
    return {ok, os.str()};
}

Outcome solver_recovery() {
    Tolerances tol;
    const ConvexBody body = ConvexBody::ellipsoid(kRecovery);
    SolverBudget budget;
    budget.seed = 7;
    const SearchResult res = find_critical_points(body, 1.5, budget, tol);
    const double actions[2] = {kPi, kPi * 1.69};
    double action_err = 0.0, phi_err = 0.0;
    bool found[2] = {false, false};
    for (const auto& p : res.points)
        for (int j = 0; j < 2; ++j) {
            const double e = std::abs(p.orbit.action - actions[j]);
            if (e <= 1e-5) {
                found[j] = true;
                action_err = std::max(action_err, e);
                phi_err = std::max(phi_err, std::abs(p.phi_value - phi_critical_value(p.orbit.action, 1.5)));
            }
        }
    std::ostringstream os;
    os << res.points.size() << " critical points, prime orbits recovered " << found[0] + found[1]
       << "/2, max action error " << action_err << ", max critical value error " << phi_err;
    return {found[0] && found[1] && action_err <= 1e-5 && phi_err <= 1e-6, os.str()};
}

Vec gaussian(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = g(rng);
    return x;
}

template <class F>
double directional_error(F f, const Vec& x, const Vec& grad, std::mt19937_64& rng) {
    const Vec d = gaussian(static_cast<int>(x.size()), rng).normalized();
    const double h = 1e-5;
    const double fd = (f(x + h * d) - f(x - h * d)) / (2 * h);
    const double an = grad.dot(d);
    return std::abs(fd - an) / std::max(1e-8, std::abs(an));
}

Outcome gradients() {
    Tolerances tol;
    std::mt19937_64 rng(11);
    double worst_phi = 0.0, worst_h = 0.0, worst_c = 0.0;
    const int n = 2, K = 6;
    for (const ConvexBody& body :
         {ConvexBody::ellipsoid(kRecovery), ConvexBody::gauge_table({1.0, 1.45, 1.2, 1.8}, 0.2)}) {
        for (int trial = 0; trial < 20; ++trial) {
            Vec v = gaussian(4 * n * K, rng);
            for (int i = 0; i < v.size(); ++i) v(i) *= 0.5 / (1 + i / (4 * n));
            const PhiValue pv = phi_with_gradient(Loop::from_flat(n, K, v), body, 1.5);
            worst_phi = std::max(
                worst_phi,
                directional_error([&](const Vec& w) { return phi(Loop::from_flat(n, K, w), body, 1.5); }, v,
                                  pv.gradient, rng));
            const Vec x = gaussian(2 * n, rng);
            const auto h = hamiltonian_alpha(body, 1.5, x, tol);
            worst_h = std::max(worst_h, directional_error(
                                            [&](const Vec& y) { return hamiltonian_alpha(body, 1.5, y, tol).value; },
                                            x, h.gradient, rng));
            const auto c = fenchel_conjugate(body, 1.5, x);
            worst_c = std::max(worst_c, directional_error(
                                            [&](const Vec& y) { return fenchel_conjugate(body, 1.5, y).value; }, x,
                                            c.gradient, rng));
        }
    }
    std::ostringstream os;
    os << "20 loops and 20 points on 2 bodies, max relative error: dual action " << worst_phi << ", H " << worst_h
       << ", H* " << worst_c;
    return {worst_phi <= 1e-5 && worst_h <= 1e-5 && worst_c <= 1e-5, os.str()};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "splitting numbers of the basic normal forms", 10, splitting_table},
        {2, "iterate index equals the root-of-unity sum", 120, bott_equivalence},
        {3, "Morse data of u^m equals the shifted iteration index", 600, index_shift},
        {4, "ellipsoid Floquet multipliers", 180, floquet},
        {5, "mean index exceeds 2 and is proportional to the action", 60, mean_index_law},
        {6, "symmetric orbit index bound", 5, symmetric_bound},
        {7, "common index jump tuples with clean ledgers", 300, jump_tuples},
        {8, "guaranteed non-hyperbolic orbits", 5, nonhyperbolic},
        {9, "elliptic lower bound", 5, elliptic_bound},
        {10, "dual action solver recovers the prime orbits of E(1, 1.3)", 900, solver_recovery},
        {11, "gradients match finite differences", 60, gradients},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("criterion %2d %s %s: %s [%.1f s of %.0f s]\n", c.number, pass ? "PASS" : "FAIL", c.name.c_str(),
                    out.detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
    }
    std::printf("%s %d of %zu criteria\n", failures == 0 ? "PASS" : "FAIL",
                static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
