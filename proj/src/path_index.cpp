#include "cchar/path_index.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

constexpr double kPi = std::numbers::pi;

// Fixes the sign so that passing through Sp(2n)⁰_ω along M e^{sεJ}, s ↑, counts +1.
constexpr int kOrientation = -1;

}  // namespace

SymplecticPath SymplecticPath::from_parts(double tau, std::vector<double> times, std::vector<Mat> mats,
                                          Evaluator eval, int depth) {
    SymplecticPath p;
    p.tau_ = tau;
    p.times_ = std::move(times);
    p.mats_ = std::move(mats);
    p.eval_ = std::move(eval);
    p.depth_ = depth;
    return p;
}

SymplecticPath SymplecticPath::from_samples(double tau, std::vector<double> times, std::vector<Mat> mats,
                                            const Tolerances& tol, double step_cap) {
    if (!(tau > 0)) throw SymplecticViolation("path period must be positive");
    if (times.size() < 2 || times.size() != mats.size())
        throw SymplecticViolation("path needs at least two samples with matching times");
    if (times.front() != 0.0 || std::abs(times.back() - tau) > 1e-12 * tau)
        throw SymplecticViolation("path samples must start at 0 and end at tau");
    const Eigen::Index d = mats.front().rows();
    if (mats.front() != Mat::Identity(d, d)) throw SymplecticViolation("path must start at the identity");
    for (std::size_t i = 0; i < mats.size(); ++i) {
        make_symplectic(mats[i], tol.sympl);
        if (i > 0) {
            if (!(times[i] > times[i - 1])) throw SymplecticViolation("path times must increase strictly");
            const double step = (mats[i] - mats[i - 1]).cwiseAbs().maxCoeff();
            if (step > step_cap) {
                std::ostringstream os;
                os << "samples " << i - 1 << " and " << i << " differ by " << step << " > step cap " << step_cap;
                throw SymplecticViolation(os.str());
            }
        }
    }
    times.back() = tau;
    return from_parts(tau, std::move(times), std::move(mats), nullptr, 0);
}

SymplecticPath SymplecticPath::from_generator(double tau, Evaluator eval, int min_samples,
                                              const Tolerances& tol, double step_cap) {
    if (!(tau > 0)) throw SymplecticViolation("path period must be positive");
    min_samples = std::max(min_samples, 2);
    std::vector<double> times(min_samples);
    std::vector<Mat> mats(min_samples);
    for (int i = 0; i < min_samples; ++i) {
        times[i] = tau * i / (min_samples - 1);
        mats[i] = eval(times[i]);
    }
    const Eigen::Index d = mats.front().rows();
    mats.front() = Mat::Identity(d, d);
    int depth = 0;
    for (bool refined = true; refined; ++depth) {
        if (depth > tol.max_depth) throw NonConvergence("generator path does not meet the step cap");
        refined = false;
        std::vector<double> nt{times.front()};
        std::vector<Mat> nm{mats.front()};
        for (std::size_t i = 1; i < times.size(); ++i) {
            if ((mats[i] - mats[i - 1]).cwiseAbs().maxCoeff() > step_cap) {
                const double mid = 0.5 * (times[i - 1] + times[i]);
                nt.push_back(mid);
                nm.push_back(eval(mid));
                refined = true;
            }
            nt.push_back(times[i]);
            nm.push_back(mats[i]);
        }
        times = std::move(nt);
        mats = std::move(nm);
    }
    for (const auto& m : mats) make_symplectic(m, tol.sympl);
    return from_parts(tau, std::move(times), std::move(mats), std::move(eval), depth);
}

Mat SymplecticPath::at(double t) const {
    if (eval_) return t <= 0.0 ? mats_.front() : eval_(t);
    if (t <= 0.0) return mats_.front();
    if (t >= tau_) return mats_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double u = (t - times_[i]) / (times_[i + 1] - times_[i]);
    const Mat j = standard_j(half_dim());
    const Mat inv = -j * mats_[i].transpose() * j;
    const Mat step = (inv * mats_[i + 1]).log();
    return mats_[i] * (u * step).exp();
}

double d_omega(const Mat& m, Complex omega) {
    const int n = static_cast<int>(m.rows()) / 2;
    const CMat a = m.cast<Complex>() - omega * CMat::Identity(m.rows(), m.cols());
    const Complex v = (n % 2 == 1 ? 1.0 : -1.0) * std::pow(std::conj(omega), n) * a.determinant();
    const double scale = std::max(1.0, std::abs(v));
    if (std::abs(v.imag()) > 1e-10 * scale) throw SymplecticViolation("D_omega has a non-real value");
    return v.real();
}

Mat xi_matrix(int n, double t, double tau) {
    const double a = 2.0 - t / tau;
    Vec diag(2 * n);
    diag.head(n).setConstant(a);
    diag.tail(n).setConstant(1.0 / a);
    return diag.asDiagonal();
}

SymplecticPath special_path_xi(int n, double tau, const Tolerances& tol, int samples) {
    auto eval = [n, tau](double t) { return xi_matrix(n, t, tau); };
    // ξ_n(0) = D(2)^{⋄n}; the path ends at the identity.
    std::vector<double> times(samples);
    std::vector<Mat> mats(samples);
    for (int i = 0; i < samples; ++i) {
        times[i] = tau * i / (samples - 1);
        mats[i] = eval(times[i]);
    }
    for (const auto& m : mats) make_symplectic(m, tol.sympl);
    return SymplecticPath::from_parts(tau, std::move(times), std::move(mats), eval, 0);
}

SymplecticPath iterate_path(const SymplecticPath& path, int m) {
    if (m < 1) throw SymplecticViolation("iterate count must be positive");
    if (m == 1) return path;
    const double tau = path.tau();
    std::vector<Mat> powers{Mat::Identity(path.endpoint().rows(), path.endpoint().cols())};
    for (int j = 1; j < m; ++j) powers.push_back(powers.back() * path.endpoint());

    std::vector<double> times;
    std::vector<Mat> mats;
    for (int j = 0; j < m; ++j) {
        for (std::size_t i = (j == 0 ? 0 : 1); i < path.size(); ++i) {
            times.push_back(j * tau + path.times()[i]);
            mats.push_back(path.mats()[i] * powers[j]);
        }
    }
    times.back() = m * tau;
    auto eval = [path, powers, tau, m](double t) {
        const int j = std::clamp(static_cast<int>(std::floor(t / tau)), 0, m - 1);
        return Mat(path.at(t - j * tau) * powers[j]);
    };
    return SymplecticPath::from_parts(m * tau, std::move(times), std::move(mats), eval, path.refinement_depth());
}

SpectralFlow::SpectralFlow(int n, Complex omega, const Tolerances& tol) : n_(n), omega_(omega), tol_(tol) {
    const CMat k = Complex(0, 1) * standard_j(n).cast<Complex>();
    Eigen::SelfAdjointEigenSolver<CMat> es(k);
    // eigenvalues ascend: −1 block first
    basis_.resize(2 * n, 2 * n);
    basis_.leftCols(n) = es.eigenvectors().rightCols(n);
    basis_.rightCols(n) = es.eigenvectors().leftCols(n);
}

SpectralFlow::Node SpectralFlow::node(double s, Mat m) const {
    Node out;
    out.s = s;
    const CMat w = basis_.adjoint() * (std::conj(omega_) * m.cast<Complex>()) * basis_;
    const auto a = w.topLeftCorner(n_, n_);
    const auto b = w.topRightCorner(n_, n_);
    const auto c = w.bottomLeftCorner(n_, n_);
    const CMat dinv = w.bottomRightCorner(n_, n_).inverse();
    out.u.resize(2 * n_, 2 * n_);
    out.u.topLeftCorner(n_, n_) = a - b * dinv * c;
    out.u.topRightCorner(n_, n_) = b * dinv;
    out.u.bottomLeftCorner(n_, n_) = -dinv * c;
    out.u.bottomRightCorner(n_, n_) = dinv;
    Eigen::ComplexEigenSolver<CMat> es(out.u, false);
    out.phases.resize(2 * n_);
    for (int i = 0; i < 2 * n_; ++i) out.phases[i] = std::arg(es.eigenvalues()(i));
    out.m = std::move(m);
    return out;
}

int SpectralFlow::flow(const Node& a, const Node& b, const Evaluator& eval, int extra_depth) const {
    return flow_rec(a, b, eval, 0, extra_depth);
}

int SpectralFlow::flow_rec(const Node& a, const Node& b, const Evaluator& eval, int depth, int forced) const {
    auto split = [&](int next_forced) {
        const double mid = 0.5 * (a.s + b.s);
        const Node c = node(mid, eval(mid));
        return flow_rec(a, c, eval, depth + 1, next_forced) + flow_rec(c, b, eval, depth + 1, next_forced);
    };
    if (forced > 0) return split(forced - 1);

    // counting cut in [π/8, 3π/8] as far as possible from every eigenphase
    double cut = kPi / 4, clearance = 0.0;
    for (int k = 0; k <= 64; ++k) {
        const double c = kPi / 8 + (kPi / 4) * k / 64.0;
        double dist = kPi / 8;
        for (double p : a.phases) dist = std::min(dist, std::abs(p - c));
        for (double p : b.phases) dist = std::min(dist, std::abs(p - c));
        if (dist > clearance) clearance = dist, cut = c;
    }
    // eigenvalues of unitary matrices move at most ‖ΔU‖₂ ≤ ‖ΔU‖_F in chord length
    const double motion = 0.5 * kPi * (b.u - a.u).norm();
    if (motion < clearance) {
        auto count = [cut](const Node& x) {
            return static_cast<int>(std::count_if(x.phases.begin(), x.phases.end(),
                                                  [cut](double p) { return p > 0.0 && p < cut; }));
        };
        return kOrientation * (count(b) - count(a));
    }
    if (depth >= tol_.max_depth) {
        std::ostringstream os;
        os << "crossing count unresolved on [" << a.s << ", " << b.s << "]";
        throw NonConvergence(os.str());
    }
    return split(0);
}

bool is_degenerate_at(const Mat& m, Complex omega, const Tolerances& tol) {
    for (const auto& c : eigen_clusters(m, tol)) {
        if (!c.on_circle) continue;
        if (std::abs(c.center / std::abs(c.center) - omega) <= tol.degenerate) return true;
    }
    return false;
}

double endpoint_perturbation(const Mat& m, const Tolerances& tol) {
    std::vector<double> angles;
    for (const auto& c : eigen_clusters(m, tol)) {
        if (!c.on_circle) continue;
        double a = std::arg(c.center);
        if (a < 0) a += 2 * kPi;
        angles.push_back(a);
    }
    std::sort(angles.begin(), angles.end());
    double gap = 2 * kPi;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const double next = i + 1 < angles.size() ? angles[i + 1] : angles.front() + 2 * kPi;
        const double g = next - angles[i];
        if (g > 1e-12) gap = std::min(gap, g);
    }
    return std::min(tol.perturb_eps, gap / 4) / std::max(1.0, m.cwiseAbs().maxCoeff());
}

int SpectralFlow::verified_flow(const Node& a, const Node& b, const Evaluator& eval) const {
    int previous = flow(a, b, eval, 0);
    for (int extra = 1; extra <= tol_.max_depth; ++extra) {
        const int current = flow(a, b, eval, extra);
        if (current == previous) return current;
        previous = current;
    }
    std::ostringstream os;
    os << "successive refinements of the crossing count disagree on [" << a.s << ", " << b.s << "]";
    throw NonConvergence(os.str());
}

std::vector<int> cumulative_crossings(const SymplecticPath& path, const SpectralFlow& sf,
                                      std::vector<SpectralFlow::Node>* path_nodes) {
    const int n = path.half_dim();
    const auto eval = [&path, n](double s) { return s < 0 ? xi_matrix(n, s + 1.0, 1.0) : path.at(s); };
    constexpr int kXiSamples = 16;
    int total = 0;
    SpectralFlow::Node prev = sf.node(-1.0, xi_matrix(n, 0.0, 1.0));
    for (int k = 1; k < kXiSamples; ++k) {
        const double s = -1.0 + static_cast<double>(k) / kXiSamples;
        SpectralFlow::Node next = sf.node(s, xi_matrix(n, s + 1.0, 1.0));
        total += sf.verified_flow(prev, next, eval);
        prev = std::move(next);
    }
    std::vector<int> out;
    out.reserve(path.size());
    if (path_nodes) path_nodes->clear();
    for (std::size_t i = 0; i < path.size(); ++i) {
        SpectralFlow::Node next = sf.node(path.times()[i], path.mats()[i]);
        total += sf.verified_flow(prev, next, eval);
        out.push_back(total);
        if (path_nodes) path_nodes->push_back(next);
        prev = std::move(next);
    }
    return out;
}

OmegaIndex close_endpoint(const SpectralFlow& sf, const SpectralFlow::Node& end, int prefix,
                          const Tolerances& tol) {
    OmegaIndex out;
    out.omega = sf.omega();
    const Mat& m = end.m;
    if (!is_degenerate_at(m, sf.omega(), tol)) {
        out.index = out.upper_index = prefix;
        return out;
    }
    const int n = static_cast<int>(m.rows()) / 2;
    out.degenerate_endpoint = true;
    out.nullity = nullity(m, sf.omega(), tol);
    const double eps = endpoint_perturbation(m, tol);
    const double s0 = end.s;
    int counts[2];
    for (int k = 0; k < 2; ++k) {
        const double sign = k == 0 ? -1.0 : 1.0;
        const auto arc = [&m, n, eps, sign, s0](double s) {
            return Mat(m * rotation_j(n, sign * eps * (s - s0)).matrix());
        };
        const auto tip = sf.node(s0 + 1.0, arc(s0 + 1.0));
        counts[k] = prefix + sf.verified_flow(end, tip, arc);
    }
    out.index = std::min(counts[0], counts[1]);
    out.upper_index = std::max(counts[0], counts[1]);
    return out;
}

OmegaIndex omega_index(const SymplecticPath& path, Complex omega, const Tolerances& tol) {
    SpectralFlow sf(path.half_dim(), omega, tol);
    std::vector<SpectralFlow::Node> nodes;
    const auto counts = cumulative_crossings(path, sf, &nodes);
    return close_endpoint(sf, nodes.back(), counts.back(), tol);
}

void to_json(nlohmann::json& j, const SymplecticPath& p) {
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t i = 0; i < p.size(); ++i)
        samples.push_back({{"t", p.times()[i]}, {"M", {{"n", p.half_dim()}, {"rows", matrix_to_json(p.mats()[i])}}}});
    j = nlohmann::json{{"tau", p.tau()}, {"samples", samples}};
}

SymplecticPath path_from_json(const nlohmann::json& j, const Tolerances& tol) {
    std::vector<double> times;
    std::vector<Mat> mats;
    for (const auto& s : j.at("samples")) {
        times.push_back(s.at("t").get<double>());
        mats.push_back(matrix_from_json(s.at("M").at("rows")));
    }
    return SymplecticPath::from_samples(j.at("tau").get<double>(), std::move(times), std::move(mats), tol);
}

}  // namespace cchar
