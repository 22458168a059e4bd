#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cchar/iteration.hpp"

namespace cchar {

struct OrbitSummary {
    std::string label;
    int n = 0;
    int i1 = 0;
    int nu1 = 0;
    int s_plus = 0;
    double mean_index = 0.0;
    Rationality mean_rational;
    int e = 0;
    bool symmetric = false;
    OrbitClass classification = OrbitClass::DegenerateOther;
    std::vector<AngleVerdict> angles;
    std::optional<double> action;
};

/// Extracts the summary and checks i1 ≥ n, î > 2, 2S⁺ ≥ 2 and, for symmetric
/// orbits, i1 + 2S⁺ − ν1 ≥ n. Throws InvariantViolation naming the orbit.
OrbitSummary summarize(const IndexProfile& profile, const std::string& label, bool symmetric,
                       std::optional<double> action, const Tolerances& tol);
void validate_summary(const OrbitSummary& s);

/// lcm of the denominators of every rational θ/π and rational î witness.
long common_M(const std::vector<OrbitSummary>& summaries);

struct LedgerLine {
    std::string orbit;
    std::string tag;
    long lhs = 0;
    std::string relation;  // "=", ">=", "<="
    long rhs = 0;
    bool pass = false;
};

/// Per-orbit index data queried by the verifier.
struct IndexOracle {
    const IterateTable* table = nullptr;
    int index(long m) const { return table->index(m); }
    int nullity(long m) const { return table->nullity(m); }
};

struct JumpTuple {
    long T = 0;
    std::vector<long> m;
    std::vector<int> chi;
    std::vector<LedgerLine> jump_ledger;     // the five defining relations
    std::vector<LedgerLine> derived_ledger;  // consequences for y^m-indexed forms
};

/// First `count` values of T ≤ T_cap for which every orbit admits
/// m_j = ([T/(M î_j)] + χ_j)M satisfying the five jump relations.
/// Throws NoTupleFound with the nearest miss.
std::vector<JumpTuple> find_jump_tuples(const std::vector<OrbitSummary>& summaries,
                                        const std::vector<IndexOracle>& oracles, long M, long T_cap, int count = 3);

/// Checks the jump relations for one orbit at one (T, m).
std::vector<LedgerLine> jump_relations(const OrbitSummary& s, const IndexOracle& o, long T, long m);

/// Evaluates the consequences of a tuple; throws LedgerFailure on the first
/// failing line.
std::vector<LedgerLine> derived_bounds(const JumpTuple& tuple, const std::vector<OrbitSummary>& summaries,
                                       const std::vector<IndexOracle>& oracles, int forward_checks = 32);

struct Assignment {
    std::vector<int> orbit;      // ρ(i) for degree 2(T − i), i = 1..n
    std::vector<long> iterate;   // λ(i)
    int theta1 = 0, theta2 = 0, theta3 = 0;
    int guaranteed = 0;          // 2#Θ₁ + 2#Θ₂ + #Θ₃ − 1
};

struct NonHyperbolicCertificate {
    long assignments_examined = 0;
    bool enumeration_capped = false;
    std::optional<Assignment> worst;
    int guaranteed = 0;   // minimum over admissible assignments
    int classified_nonhyperbolic = 0;
    std::vector<std::string> claims;  // cross-check notes
    std::string claim3_basis;
    bool pass = false;
};

/// Enumerates admissible (ρ, λ) with λ(i) ∈ {2m_ρ(i) − 1, 2m_ρ(i)} and degree
/// 2(T − i) inside [i(y^λ), i(y^λ) + ν(y^λ) − 1]; the guaranteed count is the
/// minimum over them. Throws AssignmentInfeasible when none exists.
NonHyperbolicCertificate nonhyperbolic_certificate(const JumpTuple& tuple, const std::vector<OrbitSummary>& summaries,
                                                   const std::vector<IndexOracle>& oracles,
                                                   long combinatorial_cap = 1000000);

struct EllipticBound {
    int rho_n = 0;
    int k = 0;  // geometrically distinct characteristics, pairs ±y counted twice
    int elliptic_lower_bound = 0;
    std::string basis;
    int classified_elliptic = 0;
};

EllipticBound rho_n_and_elliptic_bound(const std::vector<OrbitSummary>& summaries, int n);

struct JumpCertificate {
    int n = 0;
    long M = 1;
    long T_cap = 0;
    std::vector<OrbitSummary> summaries;
    std::vector<JumpTuple> tuples;
    NonHyperbolicCertificate nonhyperbolic;
    EllipticBound elliptic;
    std::vector<std::string> assumptions;
    bool pass = false;
};

JumpCertificate certify(const std::vector<OrbitSummary>& summaries, const std::vector<IndexOracle>& oracles, long T_cap);

void to_json(nlohmann::json& j, const OrbitSummary& s);
void to_json(nlohmann::json& j, const LedgerLine& l);
void to_json(nlohmann::json& j, const JumpCertificate& c);
std::string render_text(const JumpCertificate& c);

}  // namespace cchar
