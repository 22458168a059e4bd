#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cchar/dual_action.hpp"
#include "cchar/jump.hpp"

namespace cchar {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    ConvexBody body = ConvexBody::ellipsoid({1.0, 1.3});
    double alpha = 1.5;
    bool closed_form = true;
    bool dual_action = false;
    SolverBudget budget;
    int m_max = 32;
    Tolerances tol;
    long T_cap = 100000;
    int shift_m = 8;    // iterates checked against the Morse data of u^m
    int shift_K = 16;   // Fourier modes of the prime loop in that check
    double cross_check = 1e-5;  // action agreement between the two methods
    double phi_check = 1e-6;    // |Φ − formula| at dual-action critical points
    double floquet = 1e-7;      // multiplier angle error on ellipsoids
    std::string out_dir = ".";
    nlohmann::json source;      // the parsed document, hashed into provenance
};

Tolerances tolerances_from_json(const nlohmann::json& j);
nlohmann::json tolerances_to_json(const Tolerances& t);

/// Parses and validates a config document; throws ConfigError naming the
/// violated constraint.
RunConfig config_from_json(const nlohmann::json& j);

struct OrbitRow {
    std::string label;
    std::string source;  // "closed-form" or "dual-action"
    double period = 0.0;
    double action = 0.0;
    double phi = 0.0;
    int i1 = 0;
    int nu1 = 0;
    double mean_index = 0.0;
    int e = 0;
    int s_plus = 0;
    std::string classification;
    bool symmetric = false;
};

struct AuditLine {
    std::string name;
    bool pass = false;
    double slack = 0.0;  // distance to the threshold, negative on failure
    std::string detail;
};

struct RunReport {
    std::string status = "OK";  // "OK", "AUDIT-FAILED" or "FAILED"
    std::string failed_stage;
    std::string error;
    std::vector<OrbitRow> orbits;
    std::optional<JumpCertificate> certificate;
    std::vector<AuditLine> audits;
    nlohmann::json provenance;
    nlohmann::json cross_check;
    std::vector<std::string> diagnostics;
    bool audits_pass() const;
};

/// Intermediate artifacts kept for the audits and the trajectory files.
struct RunArtifacts {
    std::vector<ClosedCharacteristic> closed_form;
    SearchResult search;
    std::vector<ClosedCharacteristic> primary;  // orbits fed to the certificate
    std::vector<Loop> loops;                    // prime loops of `primary`
    std::vector<IndexProfile> profiles;
    std::vector<OrbitSummary> summaries;
};

using Logger = std::function<void(const std::string&)>;

/// body → orbits → monodromies → profiles → certificate → audits. Stage
/// errors are caught and recorded; the report is always returned.
RunReport run_pipeline(const RunConfig& config, const Logger& log = {}, RunArtifacts* artifacts = nullptr);

std::vector<AuditLine> audit_invariants(const RunConfig& config, const RunReport& report,
                                        const RunArtifacts& artifacts);

void to_json(nlohmann::json& j, const OrbitRow& r);
void to_json(nlohmann::json& j, const AuditLine& a);
nlohmann::json report_to_json(const RunReport& r);
std::string orbits_csv(const RunReport& r);
std::string certificate_text(const RunReport& r);

/// Writes report.json, orbits.csv, certificate.txt and one trajectory CSV per
/// orbit under dir.
void write_outputs(const RunReport& r, const RunArtifacts& artifacts, const std::string& dir);

/// Exit status: 0 all audits pass, 2 audit failures, 3 stage error.
int exit_code(const RunReport& r);

}  // namespace cchar
