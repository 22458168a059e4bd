#include "cchar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cchar/errors.hpp"

namespace cchar {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Tolerances, sympl, circle, cluster_gap, rank, degenerate,
                                                coorient_eps, coorient_tol, perturb_eps, max_depth, splitting_eps,
                                                q_max, rational, slope, fit, growth, energy, drift_cap, orbit_closure,
                                                symmetry, symmetry_gap, integrator, x_min, gradient, eigen,
                                                duplicate, ratio)

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

double wrap_angle(double a) {
    a = std::fmod(a, 2 * std::numbers::pi);
    return a < 0 ? a + 2 * std::numbers::pi : a;
}

double angle_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, 2 * std::numbers::pi - d);
}

}  // namespace

Tolerances tolerances_from_json(const nlohmann::json& j) {
    const nlohmann::json defaults = Tolerances{};
    std::set<std::string> keys;
    for (const auto& [key, value] : defaults.items()) keys.insert(key);
    reject_unknown(j, keys, "tolerances");
    Tolerances t = j.get<Tolerances>();
    const nlohmann::json parsed = t;
    for (const auto& [key, value] : parsed.items())
        if (!(value.get<double>() > 0)) throw ConfigError("tolerance '" + key + "' must be positive");
    return t;
}

nlohmann::json tolerances_to_json(const Tolerances& t) { return t; }

RunConfig config_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"body", "alpha", "methods", "solver", "m_max", "tolerances", "T_cap", "index_shift", "checks",
                       "seed"},
                   "config");
    RunConfig c;
    c.source = j;
    try {
        if (!j.contains("body")) throw ConfigError("config needs a 'body'");
        c.body = body_from_json(j.at("body"));
        c.alpha = j.value("alpha", c.alpha);
        if (!(c.alpha > 1 && c.alpha < 2))
            throw ConfigError("alpha must lie in the open interval (1, 2), got " + fmt(c.alpha));

        std::vector<std::string> methods;
        if (j.contains("methods")) methods = j.at("methods").get<std::vector<std::string>>();
        else methods = {c.body.kind() == ConvexBody::Kind::Ellipsoid ? "closed-form" : "dual-action"};
        c.closed_form = c.dual_action = false;
        for (const auto& m : methods) {
            if (m == "closed-form") c.closed_form = true;
            else if (m == "dual-action") c.dual_action = true;
            else throw ConfigError("unknown method '" + m + "'; expected closed-form or dual-action");
        }
        if (!c.closed_form && !c.dual_action) throw ConfigError("methods must name at least one method");
        if (c.closed_form && c.body.kind() != ConvexBody::Kind::Ellipsoid)
            throw ConfigError("closed-form method requires an ellipsoid body");

        if (j.contains("solver")) c.budget = budget_from_json(j.at("solver"));
        if (j.contains("seed")) c.budget.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("tolerances")) c.tol = tolerances_from_json(j.at("tolerances"));

        c.m_max = j.value("m_max", c.m_max);
        c.T_cap = j.value("T_cap", c.T_cap);
        if (j.contains("index_shift")) {
            const auto& s = j.at("index_shift");
            reject_unknown(s, {"m_max", "K"}, "index_shift");
            c.shift_m = s.value("m_max", c.shift_m);
            c.shift_K = s.value("K", c.shift_K);
        }
        if (j.contains("checks")) {
            const auto& s = j.at("checks");
            reject_unknown(s, {"cross_check", "phi", "floquet"}, "checks");
            c.cross_check = s.value("cross_check", c.cross_check);
            c.phi_check = s.value("phi", c.phi_check);
            c.floquet = s.value("floquet", c.floquet);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (c.m_max < 16) throw ConfigError("m_max must be >= 16, got " + std::to_string(c.m_max));
    if (c.T_cap < 1) throw ConfigError("T_cap must be >= 1");
    if (c.shift_m < 1 || c.shift_K < 2) throw ConfigError("index_shift needs m_max >= 1 and K >= 2");
    if (!(c.cross_check > 0 && c.phi_check > 0 && c.floquet > 0)) throw ConfigError("checks must be positive");
    return c;
}

bool RunReport::audits_pass() const {
    return std::all_of(audits.begin(), audits.end(), [](const AuditLine& a) { return a.pass; });
}

RunReport run_pipeline(const RunConfig& config, const Logger& log, RunArtifacts* artifacts) {
    RunReport rep;
    RunArtifacts local;
    RunArtifacts& art = artifacts ? *artifacts : local;
    auto say = [&log](const std::string& s) {
        if (log) log(s);
    };
    rep.provenance = {{"schema_version", kSchemaVersion},
                      {"version", kVersion},
                      {"config_hash", fnv1a(config.source.dump())},
                      {"seed", config.budget.seed},
                      {"alpha", config.alpha},
                      {"body", config.body},
                      {"tolerances", tolerances_to_json(config.tol)}};
    const int n = config.body.half_dim();
    std::string stage = "setup";
    try {
        if (config.closed_form) {
            stage = "closed-form";
            say("closed-form characteristics of the ellipsoid");
            art.closed_form = ellipsoid_characteristics(config.body.radii(), config.alpha, config.tol);
        }
        if (config.dual_action) {
            stage = "dual-action";
            say("multistart search for critical points of the dual action");
            art.search = find_critical_points(config.body, config.alpha, config.budget, config.tol);
            rep.diagnostics = art.search.diagnostics;
            if (art.search.points.empty()) throw NonConvergence("no critical point of the dual action converged");
        }
        if (config.closed_form && config.dual_action) {
            stage = "cross-check";
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& c : art.closed_form) {
                const CriticalPoint* best = nullptr;
                for (const auto& p : art.search.points)
                    if (!best || std::abs(p.orbit.action - c.action) < std::abs(best->orbit.action - c.action))
                        best = &p;
                rows.push_back({{"closed_form", c.label},
                                {"closed_form_action", c.action},
                                {"dual_action", best ? best->orbit.label : ""},
                                {"dual_action_action", best ? best->orbit.action : 0.0},
                                {"difference", best ? std::abs(best->orbit.action - c.action) : 0.0}});
            }
            rep.cross_check = {{"pairs", rows},
                               {"closed_form_count", art.closed_form.size()},
                               {"dual_action_count", art.search.points.size()}};
        }

        stage = "loops";
        if (config.closed_form) {
            art.primary = art.closed_form;
            for (const auto& c : art.primary)
                art.loops.push_back(loop_from_characteristic(c, config.body, config.alpha, config.shift_K, config.tol));
        } else {
            for (const auto& p : art.search.points) {
                art.primary.push_back(p.orbit);
                // Galerkin critical point at the shift-check truncation
                Loop u = p.loop.resized(config.shift_K);
                const double g = polish_critical_point(u, config.body, config.alpha,
                                                       std::min(config.budget.g_tol, 1e-12), 60);
                if (g > config.budget.g_tol)
                    throw NonConvergence(p.orbit.label + ": loop at K = " + std::to_string(config.shift_K) +
                                         " did not converge, |grad Phi| = " + fmt(g));
                art.loops.push_back(u);
            }
        }

        stage = "profiles";
        for (const auto& c : art.primary) {
            say("index profile of " + c.label);
            art.profiles.push_back(build_profile(c.monodromy_path, config.m_max, config.tol));
        }
        for (std::size_t k = 0; k < art.primary.size(); ++k) {
            const auto& c = art.primary[k];
            const auto& p = art.profiles[k];
            OrbitRow r;
            r.label = c.label;
            r.source = config.closed_form ? "closed-form" : "dual-action";
            r.period = c.period;
            r.action = c.action;
            r.phi = config.closed_form ? phi_critical_value(c.action, config.alpha) : art.search.points[k].phi_value;
            r.i1 = p.i_of_m.at(1);
            r.nu1 = p.nu_of_m.at(1);
            r.mean_index = p.mean_index;
            r.e = p.elliptic_height;
            r.s_plus = p.s_plus;
            r.classification = to_string(p.classification);
            r.symmetric = c.symmetric_orbit;
            rep.orbits.push_back(r);
        }

        stage = "certificate";
        say("common index jump certificate");
        std::vector<IndexOracle> oracles;
        for (std::size_t k = 0; k < art.primary.size(); ++k) {
            const auto& c = art.primary[k];
            art.summaries.push_back(summarize(art.profiles[k], c.label, c.symmetric_orbit, c.action, config.tol));
            oracles.push_back(IndexOracle{&*art.profiles[k].table});
        }
        rep.certificate = certify(art.summaries, oracles, config.T_cap);
        if (static_cast<int>(art.primary.front().monodromy_path.endpoint().rows()) != 2 * n)
            throw InvariantViolation("monodromy dimension does not match the body");

        stage = "audit";
        say("invariant audits");
        rep.audits = audit_invariants(config, rep, art);
    } catch (const Error& e) {
        rep.status = "FAILED";
        rep.failed_stage = stage;
        rep.error = e.what();
    } catch (const std::exception& e) {
        rep.status = "FAILED";
        rep.failed_stage = stage;
        rep.error = std::string("unexpected: ") + e.what();
    }
    if (rep.status == "OK" && !rep.audits_pass()) rep.status = "AUDIT-FAILED";
    return rep;
}

std::vector<AuditLine> audit_invariants(const RunConfig& config, const RunReport& report,
                                        const RunArtifacts& art) {
    std::vector<AuditLine> out;
    const Tolerances& tol = config.tol;
    const int n = config.body.half_dim();
    auto add = [&out](std::string name, bool pass, double slack, std::string detail) {
        out.push_back({std::move(name), pass, slack, std::move(detail)});
    };
    const auto& orbits = art.primary;
    const auto& profiles = art.profiles;

    {
        double worst = 0;
        for (const auto& c : orbits) worst = std::max(worst, symplectic_residual(c.monodromy_path.endpoint()));
        add("monodromy symplectic", worst <= tol.sympl, tol.sympl - worst, "max |M^T J M - J| = " + fmt(worst));
    }
    {
        int worst = std::numeric_limits<int>::max(), worst_e = std::numeric_limits<int>::max();
        bool even = true;
        for (const auto& p : profiles) {
            worst = std::min(worst, p.nu_of_m.at(1) - 1);
            worst_e = std::min(worst_e, 2 * n - p.elliptic_height);
            even = even && p.elliptic_height % 2 == 0 && p.elliptic_height >= 0;
        }
        add("eigenvalue 1 at the monodromy", worst >= 0, worst, "min nu(y,1) - 1 = " + std::to_string(worst));
        add("elliptic height even and <= 2n", even && worst_e >= 0, worst_e,
            "min 2n - e = " + std::to_string(worst_e));
    }
    {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& p : profiles) worst = std::min(worst, p.mean_index - 2);
        add("mean index > 2", worst > 0, worst, "min mean index - 2 = " + fmt(worst));
    }
    if (orbits.size() >= 2) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t k = 0; k < orbits.size(); ++k) {
            const double r = profiles[k].mean_index / orbits[k].action;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double spread = (hi - lo) / std::abs(0.5 * (hi + lo));
        add("mean index / action constant", spread <= tol.ratio, tol.ratio - spread,
            "relative spread " + fmt(spread) + ", ratio " + fmt(0.5 * (hi + lo)) +
                (spread <= tol.ratio ? "" : "; the law holds only when the prime characteristics are finitely many"));
    }
    {
        int worst = std::numeric_limits<int>::max(), worst_s = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < orbits.size(); ++k) {
            const auto& p = profiles[k];
            worst_s = std::min(worst_s, 2 * p.s_plus - 2);
            if (orbits[k].symmetric_orbit)
                worst = std::min(worst, p.i_of_m.at(1) + 2 * p.s_plus - p.nu_of_m.at(1) - n);
        }
        add("2 S+ >= 2", worst_s >= 0, worst_s, "min 2S+ - 2 = " + std::to_string(worst_s));
        if (worst == std::numeric_limits<int>::max())
            add("symmetric orbit index bound", true, 0, "no symmetric orbit");
        else
            add("symmetric orbit index bound", worst >= 0, worst,
                "min i(y,1) + 2S+ - nu(y,1) - n = " + std::to_string(worst));
    }
    {
        int worst = std::numeric_limits<int>::max();
        for (const auto& p : profiles)
            for (int m = 1; m < p.m_max; ++m)
                worst = std::min(worst, p.i_of_m.at(m + 1) - 1 + p.elliptic_height / 2 - p.i_of_m.at(m) - p.nu_of_m.at(m));
        add("iterate index chain", worst >= 0, worst,
            "min i(y,m+1) - 1 + e/2 - i(y,m) - nu(y,m) = " + std::to_string(worst));
    }
    {
        int mismatches = 0, checked = 0;
        const int m_top = std::min(12, config.m_max);
        for (std::size_t k = 0; k < orbits.size(); ++k)
            for (int m = 1; m <= m_top; ++m, ++checked)
                if (bott_sum_oracle(orbits[k].monodromy_path, m, tol) != profiles[k].i_of_m.at(m)) ++mismatches;
        add("iterate index equals root-of-unity sum", mismatches == 0, -mismatches,
            std::to_string(checked) + " iterates, " + std::to_string(mismatches) + " mismatches");
    }
    {
        int mismatches = 0, checked = 0;
        std::string first;
        for (std::size_t k = 0; k < orbits.size(); ++k)
            for (int m = 1; m <= config.shift_m; ++m, ++checked) {
                const MorseData md = morse_data(art.loops[k].iterate(m, config.alpha), config.body, config.alpha, tol);
                const int want_i = profiles[k].i_of_m.at(m) - n, want_nu = profiles[k].nu_of_m.at(m);
                if (md.index != want_i || md.nullity != want_nu) {
                    if (first.empty())
                        first = "; first at " + orbits[k].label + " m=" + std::to_string(m) + ": (" +
                                std::to_string(md.index) + "," + std::to_string(md.nullity) + ") vs (" +
                                std::to_string(want_i) + "," + std::to_string(want_nu) + ")";
                    ++mismatches;
                }
            }
        add("Morse index of u^m equals i(y,m) - n", mismatches == 0, -mismatches,
            std::to_string(checked) + " iterates, " + std::to_string(mismatches) + " mismatches" + first);
    }
    if (config.body.symmetric()) {
        int mismatches = 0;
        for (const auto& u : art.loops) {
            const MorseData a = morse_data(u, config.body, config.alpha, tol);
            const MorseData b = morse_data(u.scaled(-1.0), config.body, config.alpha, tol);
            if (a.index != b.index || a.nullity != b.nullity) ++mismatches;
        }
        add("Morse data of u and -u agree", mismatches == 0, -mismatches,
            std::to_string(art.loops.size()) + " loops, " + std::to_string(mismatches) + " mismatches");
    }
    if (config.dual_action) {
        double worst = 0;
        for (const auto& p : art.search.points)
            worst = std::max(worst, std::abs(p.phi_value - phi_critical_value(p.orbit.action, config.alpha)));
        add("critical value matches action formula", worst <= config.phi_check, config.phi_check - worst,
            "max |Phi - formula| = " + fmt(worst));
    }
    if (config.closed_form && config.dual_action) {
        double worst = 0;
        for (const auto& row : report.cross_check.at("pairs")) worst = std::max(worst, row.at("difference").get<double>());
        const bool same = art.closed_form.size() == art.search.points.size();
        add("closed-form and dual-action actions agree", same && worst <= config.cross_check,
            config.cross_check - worst,
            "max action difference " + fmt(worst) + ", orbit counts " + std::to_string(art.closed_form.size()) + "/" +
                std::to_string(art.search.points.size()));
    }
    if (config.body.kind() == ConvexBody::Kind::Ellipsoid) {
        const auto& r = config.body.radii();
        double worst = 0;
        bool matched = true;
        for (const auto& c : orbits) {
            int j = 0;
            for (int k = 1; k < n; ++k)
                if (std::abs(c.action - std::numbers::pi * r[k] * r[k]) <
                    std::abs(c.action - std::numbers::pi * r[j] * r[j]))
                    j = k;
            const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(c.monodromy_path.endpoint()).eigenvalues();
            std::vector<double> angles;
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                if (std::abs(ev(i) - 1.0) > 1e-4) angles.push_back(std::arg(ev(i)));
            if (static_cast<int>(angles.size()) != 2 * (n - 1)) {
                matched = false;
                continue;
            }
            std::vector<bool> used(angles.size(), false);
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                for (double sign : {1.0, -1.0}) {
                    const double target = sign * 2 * std::numbers::pi * r[j] * r[j] / (r[k] * r[k]);
                    std::size_t best = angles.size();
                    for (std::size_t i = 0; i < angles.size(); ++i)
                        if (!used[i] && (best == angles.size() || angle_distance(angles[i], target) <
                                                                      angle_distance(angles[best], target)))
                            best = i;
                    used[best] = true;
                    worst = std::max(worst, angle_distance(angles[best], target));
                }
            }
        }
        add("ellipsoid Floquet multipliers", matched && worst <= config.floquet, config.floquet - worst,
            "max angle error " + fmt(worst));
    }

    if (report.certificate) {
        const JumpCertificate& cert = *report.certificate;
        int failing = 0, lines = 0;
        for (const auto& t : cert.tuples)
            for (const auto* ledger : {&t.jump_ledger, &t.derived_ledger})
                for (const auto& l : *ledger) ++lines, failing += l.pass ? 0 : 1;
        add("common index jump tuples", cert.tuples.size() >= 3 && failing == 0,
            static_cast<double>(cert.tuples.size()) - 3,
            std::to_string(cert.tuples.size()) + " tuples, " + std::to_string(lines) + " ledger lines, " +
                std::to_string(failing) + " failing");

        int arithmetic = 0, rational_bad = 0;
        for (const auto& t : cert.tuples)
            for (std::size_t j = 0; j < t.m.size(); ++j) {
                const auto& s = cert.summaries[j];
                long base;
                if (s.mean_rational.rational) {
                    base = (t.T * s.mean_rational.q) / (cert.M * s.mean_rational.p);
                    if (2 * static_cast<__int128>(t.m[j]) * s.mean_rational.p !=
                        2 * static_cast<__int128>(t.T) * s.mean_rational.q)
                        ++rational_bad;
                } else {
                    base = static_cast<long>(std::floor(static_cast<long double>(t.T) /
                                                        (static_cast<long double>(cert.M) * s.mean_index)));
                }
                if ((base + t.chi[j]) * cert.M != t.m[j]) ++arithmetic;
            }
        add("jump tuple arithmetic re-derived", arithmetic == 0, -arithmetic,
            std::to_string(arithmetic) + " mismatches");
        add("rational mean index iterates reach 2T", rational_bad == 0, -rational_bad,
            std::to_string(rational_bad) + " mismatches");

        bool stable = true;
        try {
            std::vector<IndexOracle> oracles;
            for (const auto& p : profiles) oracles.push_back(IndexOracle{&*p.table});
            const auto again = find_jump_tuples(cert.summaries, oracles, cert.M, 2 * cert.T_cap, 1);
            stable = again.front().T == cert.tuples.front().T && again.front().m == cert.tuples.front().m;
        } catch (const Error&) {
            stable = false;
        }
        add("first tuple unchanged under larger T_cap", stable, stable ? 0 : -1, "T_cap doubled");

        const auto& nh = cert.nonhyperbolic;
        if (nh.worst) {
            const auto& a = *nh.worst;
            const int lhs = 2 * a.theta1 + a.theta2 + a.theta3;
            add("carrier partition covers n degrees", lhs == n, lhs - n,
                "2 theta1 + theta2 + theta3 = " + std::to_string(lhs));
        }
        add("guaranteed non-hyperbolic orbits", nh.pass, nh.guaranteed - (n - 1),
            "guaranteed " + std::to_string(nh.guaranteed) + ", classified " +
                std::to_string(nh.classified_nonhyperbolic) + ", need " + std::to_string(n - 1));
        add("elliptic lower bound", cert.elliptic.elliptic_lower_bound == 2 && cert.elliptic.classified_elliptic >= 2,
            cert.elliptic.classified_elliptic - 2,
            "bound " + std::to_string(cert.elliptic.elliptic_lower_bound) + " (" + cert.elliptic.basis +
                "), classified elliptic " + std::to_string(cert.elliptic.classified_elliptic));
    }
    return out;
}

void to_json(nlohmann::json& j, const OrbitRow& r) {
    j = nlohmann::json{{"label", r.label}, {"source", r.source},   {"tau", r.period},
                       {"A", r.action},    {"Phi", r.phi},         {"i1", r.i1},
                       {"nu1", r.nu1},     {"mean_index", r.mean_index}, {"e", r.e},
                       {"S_plus", r.s_plus}, {"classification", r.classification}, {"symmetric", r.symmetric}};
}

void to_json(nlohmann::json& j, const AuditLine& a) {
    j = nlohmann::json{{"name", a.name}, {"verdict", a.pass ? "PASS" : "FAIL"}, {"slack", a.slack},
                       {"detail", a.detail}};
}

nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j{{"schema_version", kSchemaVersion},
                     {"status", r.status},
                     {"provenance", r.provenance},
                     {"orbits", r.orbits},
                     {"audits", r.audits},
                     {"diagnostics", r.diagnostics}};
    if (!r.failed_stage.empty()) j["failure"] = {{"stage", r.failed_stage}, {"error", r.error}};
    if (!r.cross_check.is_null()) j["cross_check"] = r.cross_check;
    j["certificate"] = r.certificate ? nlohmann::json(*r.certificate) : nlohmann::json(nullptr);
    return j;
}

std::string orbits_csv(const RunReport& r) {
    std::ostringstream os;
    os << std::setprecision(15);
    os << "label,source,tau,A,Phi,i1,nu1,mean_index,e,S_plus,classification,symmetric\n";
    for (const auto& o : r.orbits)
        os << o.label << ',' << o.source << ',' << o.period << ',' << o.action << ',' << o.phi << ',' << o.i1 << ','
           << o.nu1 << ',' << o.mean_index << ',' << o.e << ',' << o.s_plus << ',' << o.classification << ','
           << (o.symmetric ? "true" : "false") << '\n';
    return os.str();
}

std::string certificate_text(const RunReport& r) {
    std::ostringstream os;
    if (r.status == "FAILED") os << "RUN FAILED at stage " << r.failed_stage << ": " << r.error << "\n\n";
    if (r.certificate) os << render_text(*r.certificate);
    os << "\nAUDITS\n";
    for (const auto& a : r.audits)
        os << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << a.name << " (slack " << fmt(a.slack) << "): " << a.detail
           << "\n";
    os << "\nSTATUS " << r.status << "\n";
    return os.str();
}

void write_outputs(const RunReport& r, const RunArtifacts& artifacts, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&dir](const std::string& name, const std::string& body) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw Error("IOError", "cannot write " + (fs::path(dir) / name).string());
        f << body;
    };
    write("report.json", report_to_json(r).dump(2) + "\n");
    write("orbits.csv", orbits_csv(r));
    write("certificate.txt", certificate_text(r));
    if (!artifacts.primary.empty()) {
        fs::create_directories(fs::path(dir) / "trajectories");
        for (const auto& c : artifacts.primary) {
            std::ostringstream os;
            write_trajectory_csv(os, c.trajectory, c.period, 256);
            write("trajectories/" + c.label + ".csv", os.str());
        }
    }
}

int exit_code(const RunReport& r) {
    if (r.status == "FAILED") return 3;
    return r.audits_pass() ? 0 : 2;
}

}  // namespace cchar
