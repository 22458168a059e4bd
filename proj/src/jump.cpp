#include "cchar/jump.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

LedgerLine line(const std::string& orbit, const std::string& tag, long lhs, const std::string& rel, long rhs) {
    bool ok = rel == "=" ? lhs == rhs : rel == ">=" ? lhs >= rhs : lhs <= rhs;
    return {orbit, tag, lhs, rel, rhs, ok};
}

int weight(const OrbitSummary& s) { return s.symmetric ? 1 : 2; }

// Candidate m_j for one T; empty when a rational mean index rules T out.
std::vector<std::pair<long, int>> candidates(const OrbitSummary& s, long T, long M) {
    std::vector<std::pair<long, int>> out;
    if (s.mean_rational.rational) {
        // T/(M î) = T q / (M p) must be a positive integer, and χ = 0
        const __int128 num = static_cast<__int128>(T) * s.mean_rational.q;
        const __int128 den = static_cast<__int128>(M) * s.mean_rational.p;
        if (den <= 0 || num % den != 0) return out;
        const long base = static_cast<long>(num / den);
        if (base >= 1) out.push_back({base * M, 0});
        return out;
    }
    const long base = static_cast<long>(std::floor(static_cast<double>(T) / (static_cast<double>(M) * s.mean_index)));
    for (int chi : {0, 1})
        if (base + chi >= 1) out.push_back({(base + chi) * M, chi});
    return out;
}

}  // namespace

OrbitSummary summarize(const IndexProfile& profile, const std::string& label, bool symmetric,
                       std::optional<double> action, const Tolerances& tol) {
    OrbitSummary s;
    s.label = label;
    s.n = profile.n;
    s.i1 = profile.i_of_m.at(1);
    s.nu1 = profile.nu_of_m.at(1);
    s.s_plus = profile.s_plus;
    s.mean_index = profile.mean_index;
    s.mean_rational = rationality(profile.mean_index, tol.q_max, tol.rational);
    s.e = profile.elliptic_height;
    s.symmetric = symmetric;
    s.classification = profile.classification;
    s.angles = profile.rotation_angles;
    s.action = action;
    validate_summary(s);
    return s;
}

void validate_summary(const OrbitSummary& s) {
    auto fail = [&s](const std::string& what) { throw InvariantViolation(s.label + ": " + what); };
    if (s.i1 < s.n)
        fail("index-at-least-n fails, i(y,1) = " + std::to_string(s.i1) + " < n = " + std::to_string(s.n));
    if (!(s.mean_index > 2)) fail("mean-index-above-2 fails, mean index = " + std::to_string(s.mean_index));
    if (2 * s.s_plus < 2) fail("splitting-at-least-one fails, 2S+ = " + std::to_string(2 * s.s_plus));
    if (s.symmetric && s.i1 + 2 * s.s_plus - s.nu1 < s.n)
        fail("symmetric-orbit-bound fails, i(y,1) + 2S+ - nu(y,1) = " + std::to_string(s.i1 + 2 * s.s_plus - s.nu1) +
             " < n = " + std::to_string(s.n));
}

long common_M(const std::vector<OrbitSummary>& summaries) {
    long M = 1;
    for (const auto& s : summaries) {
        for (const auto& a : s.angles)
            if (a.over_pi.rational) M = std::lcm(M, a.over_pi.q);
        if (s.mean_rational.rational) M = std::lcm(M, s.mean_rational.q);
    }
    return M;
}

std::vector<LedgerLine> jump_relations(const OrbitSummary& s, const IndexOracle& o, long T, long m) {
    const int e2 = s.e / 2;
    const int i2m = o.index(2 * m), nu2m = o.nullity(2 * m);
    const int im1 = o.index(2 * m - 1), num1 = o.nullity(2 * m - 1);
    return {
        line(s.label, "nullity-preserved-2m-1", num1, "=", s.nu1),
        line(s.label, "index-lower-2m", i2m, ">=", 2 * T - e2),
        line(s.label, "index-lower-2m-by-n", i2m, ">=", 2 * T - s.n),
        line(s.label, "index-upper-2m", i2m + nu2m, "<=", 2 * T + e2 - 1),
        line(s.label, "index-upper-2m-by-n", i2m + nu2m, "<=", 2 * T + s.n - 1),
        line(s.label, "index-jump-2m+1", o.index(2 * m + 1), "=", 2 * T + s.i1),
        line(s.label, "window-2m-1", im1 + num1, "=", 2 * T - (s.i1 + 2 * s.s_plus - s.nu1)),
    };
}

std::vector<JumpTuple> find_jump_tuples(const std::vector<OrbitSummary>& summaries,
                                        const std::vector<IndexOracle>& oracles, long M, long T_cap, int count) {
    std::vector<JumpTuple> out;
    long best_T = 0;
    std::size_t best_fail = std::numeric_limits<std::size_t>::max();
    std::string best_note = "no candidate T";
    for (long T = 1; T <= T_cap && static_cast<int>(out.size()) < count; ++T) {
        JumpTuple t;
        t.T = T;
        std::size_t failures = 0;
        std::string note;
        for (std::size_t j = 0; j < summaries.size(); ++j) {
            bool placed = false;
            std::size_t fewest = std::numeric_limits<std::size_t>::max();
            for (const auto& [m, chi] : candidates(summaries[j], T, M)) {
                auto rel = jump_relations(summaries[j], oracles[j], T, m);
                const auto bad = static_cast<std::size_t>(
                    std::count_if(rel.begin(), rel.end(), [](const LedgerLine& l) { return !l.pass; }));
                if (bad == 0) {
                    t.m.push_back(m);
                    t.chi.push_back(chi);
                    t.jump_ledger.insert(t.jump_ledger.end(), rel.begin(), rel.end());
                    placed = true;
                    break;
                }
                if (bad < fewest) {
                    fewest = bad;
                    for (const auto& l : rel)
                        if (!l.pass) {
                            note = l.orbit + " " + l.tag + ": " + std::to_string(l.lhs) + " " + l.relation + " " +
                                   std::to_string(l.rhs);
                            break;
                        }
                }
            }
            if (!placed) failures += fewest == std::numeric_limits<std::size_t>::max() ? 7 : fewest;
        }
        if (failures == 0) {
            out.push_back(std::move(t));
        } else if (failures < best_fail) {
            best_fail = failures;
            best_T = T;
            best_note = note.empty() ? "rational mean index excludes this T" : note;
        }
    }
    if (out.empty()) {
        std::ostringstream os;
        os << "no T <= " << T_cap << " satisfies the jump relations; nearest miss T = " << best_T << " with "
           << best_fail << " failing relation(s), e.g. " << best_note;
        throw NoTupleFound(os.str());
    }
    return out;
}

std::vector<LedgerLine> derived_bounds(const JumpTuple& tuple, const std::vector<OrbitSummary>& summaries,
                                       const std::vector<IndexOracle>& oracles, int forward_checks) {
    std::vector<LedgerLine> out;
    const long T = tuple.T;
    for (std::size_t j = 0; j < summaries.size(); ++j) {
        const OrbitSummary& s = summaries[j];
        const IndexOracle& o = oracles[j];
        const long m = tuple.m[j];
        const int n = s.n;
        // i(y^k) = i(y, k) − n, ν(y^k) = ν(y, k)
        auto shifted = [&](long k) { return static_cast<long>(o.index(k)) - n; };
        auto upper = [&](long k) { return shifted(k) + o.nullity(k) - 1; };

        out.push_back(line(s.label, "index-2m-1", o.index(2 * m - 1), "=", 2 * T - (s.i1 + 2 * s.s_plus)));
        out.push_back(line(s.label, "index-2m-1-bound", o.index(2 * m - 1), "<=", 2 * T - n - 2));
        out.push_back(line(s.label, "shifted-lower-2m", shifted(2 * m), ">=", 2 * T - 2 * n));
        out.push_back(line(s.label, "shifted-upper-2m", upper(2 * m), "<=", 2 * T - 2));

        long worst_above = std::numeric_limits<long>::max();
        for (int k = 1; k <= forward_checks; ++k) worst_above = std::min(worst_above, shifted(2 * m + k));
        out.push_back(line(s.label, "shifted-above-2m+k(k=1.." + std::to_string(forward_checks) + ")", worst_above,
                           ">=", 2 * T));

        if (2 * m - 2 >= 1) {
            long worst_below = std::numeric_limits<long>::min();
            for (long k = 2; k <= 2 * m - 1; ++k) worst_below = std::max(worst_below, upper(2 * m - k));
            out.push_back(line(s.label, "shifted-below-2m-k(k=2.." + std::to_string(2 * m - 1) + ")", worst_below,
                               "<=", 2 * T - 2 * n - 4));
        }
        out.push_back(line(s.label, "shifted-window-2m-1", upper(2 * m - 1), "=",
                           2 * T - (s.i1 + 2 * s.s_plus - s.nu1) - n - 1));
        if (s.symmetric)
            out.push_back(line(s.label, "symmetric-window-2m-1", upper(2 * m - 1), "<=", 2 * T - 2 * n - 1));
    }
    for (const auto& l : out)
        if (!l.pass) {
            std::ostringstream os;
            os << "T = " << T << ", " << l.orbit << " " << l.tag << ": " << l.lhs << " " << l.relation << " " << l.rhs;
            throw LedgerFailure(os.str());
        }
    return out;
}

NonHyperbolicCertificate nonhyperbolic_certificate(const JumpTuple& tuple, const std::vector<OrbitSummary>& summaries,
                                                   const std::vector<IndexOracle>& oracles, long combinatorial_cap) {
    NonHyperbolicCertificate cert;
    const int n = summaries.front().n;
    const long T = tuple.T;
    const int k = static_cast<int>(summaries.size());

    // admissible carriers (orbit, iterate) for each degree 2(T − i)
    std::vector<std::vector<std::pair<int, long>>> carriers(n);
    for (int i = 1; i <= n; ++i) {
        const long degree = 2 * (T - i);
        for (int j = 0; j < k; ++j)
            for (long lam : {2 * tuple.m[j] - 1, 2 * tuple.m[j]}) {
                const long lo = static_cast<long>(oracles[j].index(lam)) - n;
                const long hi = lo + oracles[j].nullity(lam) - 1;
                if (lo <= degree && degree <= hi) carriers[i - 1].push_back({j, lam});
            }
    }

    const bool have_actions = std::all_of(summaries.begin(), summaries.end(),
                                          [](const OrbitSummary& s) { return s.action.has_value(); });
    cert.claim3_basis = have_actions ? "action values of the even iterates" : "mean-index rationality only";

    bool claim1_ok = true, claim2_ok = true;
    long claim3_excluded = 0;
    std::vector<int> orbit(n);
    std::vector<long> iterate(n);
    std::function<void(int)> dfs = [&](int i) {
        if (cert.assignments_examined >= combinatorial_cap) {
            cert.enumeration_capped = true;
            return;
        }
        if (i == n) {
            ++cert.assignments_examined;
            Assignment a{orbit, iterate};
            std::vector<int> cnt(k, 0);
            std::vector<long> lam(k, 0);
            for (int d = 0; d < n; ++d) ++cnt[orbit[d]], lam[orbit[d]] = iterate[d];
            std::vector<int> theta3;
            for (int j = 0; j < k; ++j) {
                if (cnt[j] == 2) ++a.theta1;
                if (cnt[j] == 1 && lam[j] == 2 * tuple.m[j] - 1) ++a.theta2;
                if (cnt[j] == 1 && lam[j] == 2 * tuple.m[j]) ++a.theta3, theta3.push_back(j);
            }
            for (int d = 0; d < n; ++d) {
                const OrbitSummary& s = summaries[orbit[d]];
                const bool odd = iterate[d] == 2 * tuple.m[orbit[d]] - 1;
                if (s.symmetric && odd) claim1_ok = false;
                if (odd && (s.symmetric || s.classification == OrbitClass::Hyperbolic)) claim2_ok = false;
            }
            // two rational mean indices among the single even carriers would
            // force equal values 2m î = 2T for distinct critical levels
            int rational_even = 0;
            std::vector<double> even_actions;
            for (int j : theta3)
                if (summaries[j].mean_rational.rational) {
                    ++rational_even;
                    if (have_actions) even_actions.push_back(2.0 * tuple.m[j] * *summaries[j].action);
                }
            if (rational_even >= 2) {
                ++claim3_excluded;
                return;
            }
            if (2 * a.theta1 + a.theta2 + a.theta3 != n)
                throw InvariantViolation("carrier partition does not cover the n degrees");
            a.guaranteed = 2 * a.theta1 + 2 * a.theta2 + a.theta3 - 1;
            if (!cert.worst || a.guaranteed < cert.worst->guaranteed) cert.worst = a;
            return;
        }
        for (const auto& [j, lam] : carriers[i]) {
            bool used = false;
            for (int d = 0; d < i; ++d) used = used || (orbit[d] == j && iterate[d] == lam);
            if (used) continue;
            orbit[i] = j;
            iterate[i] = lam;
            dfs(i + 1);
        }
    };
    dfs(0);

    if (!cert.worst) {
        std::ostringstream os;
        os << "no assignment of the degrees 2(T - i), T = " << T << ", to iterate windows exists";
        for (int i = 0; i < n; ++i) os << "; degree " << 2 * (T - i - 1) << " has " << carriers[i].size() << " carrier(s)";
        throw AssignmentInfeasible(os.str());
    }
    cert.guaranteed = cert.worst->guaranteed;
    for (const auto& s : summaries)
        if (s.classification != OrbitClass::Hyperbolic) cert.classified_nonhyperbolic += weight(s);
    cert.claims.push_back(std::string("symmetric carriers use even iterates: ") + (claim1_ok ? "holds" : "VIOLATED"));
    cert.claims.push_back(std::string("odd-iterate carriers are non-symmetric and non-hyperbolic: ") +
                          (claim2_ok ? "holds" : "VIOLATED"));
    cert.claims.push_back("assignments excluded for two rational mean indices at even iterates: " +
                          std::to_string(claim3_excluded) + " (basis: " + cert.claim3_basis + ")");
    cert.pass = claim1_ok && claim2_ok && !cert.enumeration_capped && cert.guaranteed >= n - 1 &&
                cert.classified_nonhyperbolic >= n - 1;
    return cert;
}

EllipticBound rho_n_and_elliptic_bound(const std::vector<OrbitSummary>& summaries, int n) {
    EllipticBound b;
    b.rho_n = std::numeric_limits<int>::max();
    bool non_symmetric = false;
    for (const auto& s : summaries) {
        const int v = s.i1 + 2 * s.s_plus - s.nu1 + n;
        b.rho_n = std::min(b.rho_n, v >= 0 ? v / 2 : -((1 - v) / 2));
        b.k += weight(s);
        non_symmetric = non_symmetric || !s.symmetric;
        if (s.classification == OrbitClass::Elliptic || s.classification == OrbitClass::IrrationallyElliptic)
            b.classified_elliptic += weight(s);
    }
    if (b.k <= 2 * b.rho_n - 2) {
        b.elliptic_lower_bound = 2;
        b.basis = non_symmetric ? "k <= 2 rho_n - 2" : "all characteristics symmetric; k <= 2 rho_n - 2";
    } else if (non_symmetric && b.k - 1 <= 2 * b.rho_n - 2) {
        b.elliptic_lower_bound = 2;
        b.basis = "one member of a non-symmetric pair removed; k - 1 <= 2 rho_n - 2";
    } else {
        b.basis = "k exceeds 2 rho_n - 2; no bound";
    }
    return b;
}

JumpCertificate certify(const std::vector<OrbitSummary>& summaries, const std::vector<IndexOracle>& oracles,
                        long T_cap) {
    if (summaries.empty()) throw InvariantViolation("no characteristics to certify");
    JumpCertificate c;
    c.n = summaries.front().n;
    c.T_cap = T_cap;
    c.summaries = summaries;
    c.M = common_M(summaries);
    c.assumptions.push_back(
        "every degree 2(T - i), 1 <= i <= n, is carried by some critical orbit; this existence statement is "
        "assumed, not computed");
    c.assumptions.push_back("three valid T values stand in for infinitely many");
    bool rational = false;
    for (const auto& s : summaries) {
        rational = rational || s.mean_rational.rational;
        for (const auto& a : s.angles) rational = rational || a.over_pi.rational;
    }
    if (rational)
        c.assumptions.push_back("rational angles and mean indices are taken as exactly p/q from their detected "
                                "continued-fraction witnesses");
    c.tuples = find_jump_tuples(summaries, oracles, c.M, T_cap, 3);
    for (auto& t : c.tuples) t.derived_ledger = derived_bounds(t, summaries, oracles);
    c.nonhyperbolic = nonhyperbolic_certificate(c.tuples.front(), summaries, oracles);
    c.elliptic = rho_n_and_elliptic_bound(summaries, c.n);
    c.pass = c.tuples.size() >= 3 && c.nonhyperbolic.pass && c.elliptic.elliptic_lower_bound == 2 &&
             c.elliptic.classified_elliptic >= 2;
    return c;
}

void to_json(nlohmann::json& j, const OrbitSummary& s) {
    j = nlohmann::json{{"label", s.label},
                       {"i1", s.i1},
                       {"nu1", s.nu1},
                       {"S_plus", s.s_plus},
                       {"mean_index", s.mean_index},
                       {"mean_index_rational", s.mean_rational},
                       {"e", s.e},
                       {"symmetric", s.symmetric},
                       {"classification", to_string(s.classification)}};
    if (s.action) j["action"] = *s.action;
}

void to_json(nlohmann::json& j, const LedgerLine& l) {
    j = nlohmann::json{{"orbit", l.orbit}, {"tag", l.tag}, {"lhs", l.lhs},
                       {"relation", l.relation}, {"rhs", l.rhs}, {"verdict", l.pass ? "PASS" : "FAIL"}};
}

void to_json(nlohmann::json& j, const JumpCertificate& c) {
    nlohmann::json tuples = nlohmann::json::array();
    for (const auto& t : c.tuples)
        tuples.push_back({{"T", t.T}, {"m", t.m}, {"chi", t.chi}, {"jump_ledger", t.jump_ledger},
                          {"derived_ledger", t.derived_ledger}});
    nlohmann::json nh{{"guaranteed_nonhyperbolic", c.nonhyperbolic.guaranteed},
                      {"classified_nonhyperbolic", c.nonhyperbolic.classified_nonhyperbolic},
                      {"assignments_examined", c.nonhyperbolic.assignments_examined},
                      {"enumeration_capped", c.nonhyperbolic.enumeration_capped},
                      {"claims", c.nonhyperbolic.claims},
                      {"pass", c.nonhyperbolic.pass}};
    if (c.nonhyperbolic.worst) {
        const auto& a = *c.nonhyperbolic.worst;
        nh["worst_assignment"] = {{"orbit", a.orbit}, {"iterate", a.iterate}, {"theta1", a.theta1},
                                  {"theta2", a.theta2}, {"theta3", a.theta3}};
    }
    j = nlohmann::json{{"n", c.n},
                       {"M", c.M},
                       {"T_cap", c.T_cap},
                       {"assumptions", c.assumptions},
                       {"orbits", c.summaries},
                       {"tuples", tuples},
                       {"nonhyperbolic", nh},
                       {"elliptic", {{"rho_n", c.elliptic.rho_n},
                                     {"k", c.elliptic.k},
                                     {"elliptic_lower_bound", c.elliptic.elliptic_lower_bound},
                                     {"classified_elliptic", c.elliptic.classified_elliptic},
                                     {"basis", c.elliptic.basis}}},
                       {"pass", c.pass}};
}

std::string render_text(const JumpCertificate& c) {
    std::ostringstream os;
    os << "ASSUMPTIONS\n";
    for (const auto& a : c.assumptions) os << "  - " << a << "\n";
    os << "\nn = " << c.n << ", M = " << c.M << ", T scanned up to " << c.T_cap << "\n\nORBITS\n";
    for (const auto& s : c.summaries)
        os << "  " << s.label << ": i1=" << s.i1 << " nu1=" << s.nu1 << " S+=" << s.s_plus << " mean=" << s.mean_index
           << (s.mean_rational.rational ? " (rational)" : "") << " e=" << s.e
           << (s.symmetric ? " symmetric " : " non-symmetric ") << to_string(s.classification) << "\n";
    for (const auto& t : c.tuples) {
        os << "\nT = " << t.T << "\n";
        for (std::size_t j = 0; j < t.m.size(); ++j)
            os << "  " << c.summaries[j].label << ": m=" << t.m[j] << " chi=" << t.chi[j] << "\n";
        for (const auto* ledger : {&t.jump_ledger, &t.derived_ledger})
            for (const auto& l : *ledger)
                os << "    [" << (l.pass ? "PASS" : "FAIL") << "] " << l.orbit << " " << l.tag << ": " << l.lhs << " "
                   << l.relation << " " << l.rhs << "\n";
    }
    os << "\nNON-HYPERBOLIC\n  guaranteed " << c.nonhyperbolic.guaranteed << " (need >= " << c.n - 1
       << "), classified " << c.nonhyperbolic.classified_nonhyperbolic << ", assignments examined "
       << c.nonhyperbolic.assignments_examined << "\n";
    for (const auto& cl : c.nonhyperbolic.claims) os << "  " << cl << "\n";
    os << "\nELLIPTIC\n  rho_n = " << c.elliptic.rho_n << ", k = " << c.elliptic.k << ", lower bound "
       << c.elliptic.elliptic_lower_bound << " (" << c.elliptic.basis << "), classified elliptic "
       << c.elliptic.classified_elliptic << "\n";
    os << "\nCERTIFICATE " << (c.pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

}  // namespace cchar
