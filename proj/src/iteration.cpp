#include "cchar/iteration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

constexpr double kPi = std::numbers::pi;

Complex unit(double angle) { return std::polar(1.0, angle); }

std::vector<double> circle_angles(const Mat& m, const Tolerances& tol) {
    std::vector<double> angles;
    for (const auto& c : eigen_clusters(m, tol)) {
        if (!c.on_circle) continue;
        double a = std::arg(c.center);
        if (a < 0) a += 2 * kPi;
        if (a >= 2 * kPi - 1e-12) a = 0.0;
        angles.push_back(a);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

double angular_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2 * kPi);
    return std::min(d, 2 * kPi - d);
}

}  // namespace

std::string to_string(OrbitClass c) {
    switch (c) {
        case OrbitClass::Elliptic: return "elliptic";
        case OrbitClass::Hyperbolic: return "hyperbolic";
        case OrbitClass::NondegenerateOther: return "nondegenerate-other";
        case OrbitClass::IrrationallyElliptic: return "irrationally-elliptic";
        case OrbitClass::DegenerateOther: return "degenerate-other";
    }
    return "degenerate-other";
}

Rationality rationality(double x, int q_max, double tol) {
    Rationality r;
    r.value = x;
    // convergents h/k of the continued fraction of x
    long h_prev = 1, h = static_cast<long>(std::floor(x));
    long k_prev = 0, k = 1;
    double frac = x - std::floor(x);
    r.p = h;
    r.q = 1;
    r.error = std::abs(x - static_cast<double>(h));
    while (r.error > tol && frac > 1e-15) {
        const double inv = 1.0 / frac;
        const long a = static_cast<long>(std::floor(inv));
        frac = inv - static_cast<double>(a);
        const long h_next = a * h + h_prev;
        const long k_next = a * k + k_prev;
        if (k_next > q_max) break;
        h_prev = h, h = h_next;
        k_prev = k, k = k_next;
        r.p = h;
        r.q = k;
        r.error = std::abs(x - static_cast<double>(h) / static_cast<double>(k));
    }
    r.rational = r.error <= tol;
    return r;
}

void index_iterates(const SymplecticPath& path, int m_max, const Tolerances& tol, IndexProfile& profile) {
    if (m_max < 1) throw InvariantViolation("m_max must be at least 1");
    profile.n = path.half_dim();
    profile.m_max = m_max;
    const SymplecticPath long_path = iterate_path(path, m_max);
    const SpectralFlow sf(path.half_dim(), 1.0, tol);
    std::vector<SpectralFlow::Node> nodes;
    const auto counts = cumulative_crossings(long_path, sf, &nodes);
    const std::size_t per = path.size() - 1;
    for (int m = 1; m <= m_max; ++m) {
        const std::size_t k = static_cast<std::size_t>(m) * per;
        try {
            const OmegaIndex r = close_endpoint(sf, nodes[k], counts[k], tol);
            profile.i_of_m[m] = r.index;
            profile.nu_of_m[m] = nullity(nodes[k].m, 1.0, tol);
        } catch (const NonConvergence& e) {
            std::ostringstream os;
            os << "iterate m = " << m << ": " << e.what();
            throw NonConvergence(os.str());
        }
    }
}

int bott_sum_oracle(const SymplecticPath& path, int m, const Tolerances& tol) {
    if (m < 1) throw InvariantViolation("iterate count must be positive");
    int sum = 0;
    for (int k = 0; k < m; ++k) sum += omega_index(path, unit(2 * kPi * k / m), tol).index;
    return sum;
}

IterateTable IterateTable::from_path(const SymplecticPath& path, const Tolerances& tol) {
    IterateTable t;
    std::vector<double> angles{0.0};
    for (double a : circle_angles(path.endpoint(), tol))
        if (a - angles.back() > 1e-9) angles.push_back(a);
    for (double a : angles) {
        Cut c;
        c.angle = a;
        const OmegaIndex r = omega_index(path, unit(a), tol);
        c.index = r.index;
        c.nullity = r.degenerate_endpoint ? r.nullity : 0;
        const Rationality q = rationality(a / (2 * kPi), tol.q_max, tol.rational);
        if (q.rational) c.over_two_pi = q;
        t.cuts_.push_back(c);
    }
    for (std::size_t j = 0; j < angles.size(); ++j) {
        const double lo = angles[j];
        const double hi = j + 1 < angles.size() ? angles[j + 1] : 2 * kPi;
        t.arcs_.push_back(omega_index(path, unit(0.5 * (lo + hi)), tol).index);
    }
    return t;
}

bool IterateTable::hits(const Cut& c, long m, long* k) const {
    if (c.over_two_pi) {
        // e^{iθ} with θ/2π = p/q is an m-th root of unity iff q | m·p
        const long p = c.over_two_pi->p, q = c.over_two_pi->q;
        if ((static_cast<__int128>(m) * p) % q != 0) return false;
        *k = static_cast<long>(static_cast<__int128>(m) * p / q);
        return true;
    }
    const double x = static_cast<double>(m) * c.angle / (2 * kPi);
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-8) return false;
    *k = static_cast<long>(r);
    return true;
}

int IterateTable::index(long m) const {
    if (m < 1) throw InvariantViolation("iterate count must be positive");
    long total = 0;
    const std::size_t r = cuts_.size();
    std::vector<long> lo(r), hi(r);
    std::vector<bool> hit(r);
    for (std::size_t j = 0; j < r; ++j) {
        long k = 0;
        hit[j] = hits(cuts_[j], m, &k);
        const double x = static_cast<double>(m) * cuts_[j].angle / (2 * kPi);
        lo[j] = hit[j] ? k : static_cast<long>(std::floor(x));
        hi[j] = hit[j] ? k - 1 : static_cast<long>(std::floor(x));
        if (hit[j]) total += cuts_[j].index;
    }
    for (std::size_t j = 0; j < r; ++j) {
        // roots 2πk/m strictly inside the arc after cut j; the arc after the
        // last cut ends at k = m, which is the root at angle 0
        const long upper = j + 1 < r ? hi[j + 1] : m - 1;
        total += (upper - lo[j]) * arcs_[j];
    }
    return static_cast<int>(total);
}

int IterateTable::nullity(long m) const {
    int total = 0;
    long k = 0;
    for (const auto& c : cuts_)
        if (hits(c, m, &k)) total += c.nullity;
    return total;
}

double IterateTable::mean_index() const {
    double total = 0.0;
    for (std::size_t j = 0; j < cuts_.size(); ++j) {
        const double hi = j + 1 < cuts_.size() ? cuts_[j + 1].angle : 2 * kPi;
        total += (hi - cuts_[j].angle) * arcs_[j];
    }
    return total / (2 * kPi);
}

double mean_index_exact(const SymplecticPath& path, const Tolerances& tol) {
    return IterateTable::from_path(path, tol).mean_index();
}

void mean_index(IndexProfile& profile, const IterateTable* table, const Tolerances& tol) {
    const int count = static_cast<int>(profile.i_of_m.size());
    if (count < 2) throw SlopeUnstable("mean index needs at least two iterates");
    double sx = 0, sy = 0;
    for (const auto& [m, i] : profile.i_of_m) sx += m, sy += i;
    const double mx = sx / count, my = sy / count;
    double sxx = 0, sxy = 0;
    for (const auto& [m, i] : profile.i_of_m) sxx += (m - mx) * (m - mx), sxy += (m - mx) * (i - my);
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0;
    for (const auto& [m, i] : profile.i_of_m) rss += std::pow(i - intercept - slope * m, 2);
    const double se = count > 2 ? std::sqrt(rss / (count - 2) / sxx) : 0.0;
    profile.slope = slope;
    profile.slope_residual = se / std::max(1.0, std::abs(slope));
    if (profile.slope_residual > tol.slope) {
        std::ostringstream os;
        os << "mean-index regression residual " << profile.slope_residual << " exceeds " << tol.slope;
        throw SlopeUnstable(os.str());
    }
    profile.mean_index = slope;
    if (table) {
        profile.mean_index_exact = table->mean_index();
        profile.mean_index = *profile.mean_index_exact;
    }
}

Splitting splitting_numbers(const SymplecticPath& path, Complex omega, const Tolerances& tol) {
    const double w = std::arg(omega);
    double gap = 2 * kPi;
    for (double a : circle_angles(path.endpoint(), tol)) {
        const double d = angular_distance(a, w);
        if (d > tol.degenerate) gap = std::min(gap, d);
    }
    const double eps = std::min(tol.splitting_eps, gap / 4);
    if (eps < 1e-8) {
        std::ostringstream os;
        os << "eigenvalue angles within " << gap << " of omega leave no room for the splitting probe";
        throw GapTooSmall(os.str());
    }
    const int base = omega_index(path, omega, tol).index;
    auto at = [&](double e) {
        return Splitting{omega_index(path, omega * unit(e), tol).index - base,
                         omega_index(path, omega * unit(-e), tol).index - base};
    };
    const Splitting s1 = at(eps), s2 = at(eps / 2);
    if (s1.plus != s2.plus || s1.minus != s2.minus)
        throw NonConvergence("splitting numbers change between the two probe radii");
    return s1;
}

OrbitClass classify(const SymplecticMatrix& m, const Tolerances& tol, std::vector<AngleVerdict>* angles) {
    const int n = m.half_dim();
    const UnitSpectrum spec = unit_circle_spectrum(m, tol);
    const int e = spec.total_alg();
    const UnitEigen* one = spec.find(1.0, tol.circle);
    const int alg_one = one ? one->alg_mult : 0;

    const NormalFormDecomposition dec = normal_form_decompose(m, tol);
    std::vector<AngleVerdict> verdicts;
    for (double theta : dec.rotation_angles())
        verdicts.push_back({theta, rationality(theta / kPi, tol.q_max, tol.rational)});
    if (angles) *angles = verdicts;

    int n1_plus = 0, rotations = 0;
    bool others = false;
    for (const auto& f : dec.factors) {
        using K = NormalFormFactor::Kind;
        if (f.kind == K::N1 && std::abs(f.lambda - 1.0) < 1e-12 && f.b > 0) ++n1_plus;
        else if (f.kind == K::R && !f.non_semisimple) ++rotations;
        else others = true;
    }
    const bool all_irrational = std::none_of(verdicts.begin(), verdicts.end(),
                                             [](const AngleVerdict& v) { return v.over_pi.rational; });
    if (n1_plus == 1 && rotations == n - 1 && !others && all_irrational) return OrbitClass::IrrationallyElliptic;
    if (e == 2 * n) return OrbitClass::Elliptic;
    if (alg_one == 2 && e == 2) return OrbitClass::Hyperbolic;
    if (alg_one == 2) return OrbitClass::NondegenerateOther;
    return OrbitClass::DegenerateOther;
}

IndexProfile build_profile(const SymplecticPath& path, int m_max, const Tolerances& tol) {
    IndexProfile p;
    double rho = 1.0;
    for (const Mat& m : path.mats()) rho = std::max(rho, m.eigenvalues().cwiseAbs().maxCoeff());
    int depth = m_max;
    if (rho > 1.0) depth = std::clamp(static_cast<int>(std::log(tol.growth) / std::log(rho)), 1, m_max);
    index_iterates(path, depth, tol, p);
    p.m_max = m_max;
    p.direct_depth = depth;
    p.table = IterateTable::from_path(path, tol);
    for (int m = 1; m <= depth; ++m) {
        if (p.table->index(m) != p.i_of_m[m] || p.table->nullity(m) != p.nu_of_m[m]) {
            std::ostringstream os;
            os << "root-of-unity table disagrees with the direct iterate index at m = " << m << ": ("
               << p.table->index(m) << ", " << p.table->nullity(m) << ") vs (" << p.i_of_m[m] << ", " << p.nu_of_m[m]
               << ")";
            throw InvariantViolation(os.str());
        }
    }
    for (int m = depth + 1; m <= m_max; ++m) {
        p.i_of_m[m] = p.table->index(m);
        p.nu_of_m[m] = p.table->nullity(m);
    }
    mean_index(p, &*p.table, tol);
    const Splitting s = splitting_numbers(path, 1.0, tol);
    p.s_plus = s.plus;
    p.s_minus = s.minus;
    const SymplecticMatrix end = path.endpoint_symplectic();
    p.elliptic_height = elliptic_height(end, tol);
    p.classification = classify(end, tol, &p.rotation_angles);
    return p;
}

void to_json(nlohmann::json& j, const Rationality& r) {
    j = nlohmann::json{{"value", r.value}, {"rational", r.rational},
                       {"witness", {{"p", r.p}, {"q", r.q}, {"error", r.error}}}};
}

void to_json(nlohmann::json& j, const IndexProfile& p) {
    nlohmann::json im = nlohmann::json::object(), nm = nlohmann::json::object();
    for (const auto& [m, i] : p.i_of_m) im[std::to_string(m)] = i;
    for (const auto& [m, v] : p.nu_of_m) nm[std::to_string(m)] = v;
    nlohmann::json angles = nlohmann::json::array();
    for (const auto& a : p.rotation_angles)
        angles.push_back({{"theta_over_pi", a.over_pi.value}, {"verdict", a.over_pi}});
    j = nlohmann::json{{"n", p.n},
                       {"m_max", p.m_max},
                       {"direct_depth", p.direct_depth},
                       {"i_of_m", im},
                       {"nu_of_m", nm},
                       {"mean_index", p.mean_index},
                       {"mean_index_slope", p.slope},
                       {"slope_residual", p.slope_residual},
                       {"S_plus", p.s_plus},
                       {"S_minus", p.s_minus},
                       {"elliptic_height", p.elliptic_height},
                       {"classification", to_string(p.classification)},
                       {"rotation_angles", angles}};
    if (p.mean_index_exact) j["mean_index_exact"] = *p.mean_index_exact;
}

}  // namespace cchar
