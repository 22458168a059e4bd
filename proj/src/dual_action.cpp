#include "cchar/dual_action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

constexpr double kPi = std::numbers::pi;

struct Grid {
    int N;
    Mat cos_t;  // N × K, cos 2πk t_i
    Mat sin_t;
};

Grid make_grid(int K, int modes) {
    Grid g;
    g.N = 8 * K;
    g.cos_t.resize(g.N, modes);
    g.sin_t.resize(g.N, modes);
    for (int i = 0; i < g.N; ++i)
        for (int k = 1; k <= modes; ++k) {
            const double w = 2 * kPi * k * i / g.N;
            g.cos_t(i, k - 1) = std::cos(w);
            g.sin_t(i, k - 1) = std::sin(w);
        }
    return g;
}

double conjugate_constant(double alpha) {
    const double beta = alpha / (alpha - 1);
    return (alpha - 1) * std::pow(alpha, -beta);
}

}  // namespace

Loop Loop::zero(int n, int K) {
    Loop u;
    u.n = n;
    u.K = K;
    u.a = Mat::Zero(2 * n, K);
    u.b = Mat::Zero(2 * n, K);
    return u;
}

Loop Loop::from_flat(int n, int K, const Vec& v) {
    Loop u = zero(n, K);
    for (int k = 0; k < K; ++k) {
        u.a.col(k) = v.segment(4 * n * k, 2 * n);
        u.b.col(k) = v.segment(4 * n * k + 2 * n, 2 * n);
    }
    return u;
}

Vec Loop::flat() const {
    Vec v(4 * n * K);
    for (int k = 0; k < K; ++k) {
        v.segment(4 * n * k, 2 * n) = a.col(k);
        v.segment(4 * n * k + 2 * n, 2 * n) = b.col(k);
    }
    return v;
}

Vec Loop::at(double t) const {
    Vec x = Vec::Zero(2 * n);
    for (int k = 1; k <= K; ++k) x += a.col(k - 1) * std::cos(2 * kPi * k * t) + b.col(k - 1) * std::sin(2 * kPi * k * t);
    return x;
}

CVec Loop::coefficient(int k) const {
    if (k == 0 || std::abs(k) > K) throw InvariantViolation("loop coefficient index out of range");
    const CVec c = 0.5 * (a.col(std::abs(k) - 1).cast<Complex>() - Complex(0, 1) * b.col(std::abs(k) - 1).cast<Complex>());
    return k > 0 ? c : CVec(c.conjugate());
}

Loop Loop::resized(int new_k) const {
    Loop u = zero(n, new_k);
    const int keep = std::min(K, new_k);
    u.a.leftCols(keep) = a.leftCols(keep);
    u.b.leftCols(keep) = b.leftCols(keep);
    return u;
}

Loop Loop::shifted(double theta) const {
    Loop u = *this;
    for (int k = 1; k <= K; ++k) {
        const double c = std::cos(2 * kPi * k * theta), s = std::sin(2 * kPi * k * theta);
        u.a.col(k - 1) = a.col(k - 1) * c + b.col(k - 1) * s;
        u.b.col(k - 1) = -a.col(k - 1) * s + b.col(k - 1) * c;
    }
    return u;
}

Loop Loop::scaled(double s) const {
    Loop u = *this;
    u.a *= s;
    u.b *= s;
    return u;
}

Loop Loop::iterate(int m, double alpha) const {
    const double s = std::pow(static_cast<double>(m), (alpha - 1) / (alpha - 2));
    Loop u = zero(n, m * K);
    for (int k = 1; k <= K; ++k) {
        u.a.col(m * k - 1) = s * a.col(k - 1);
        u.b.col(m * k - 1) = s * b.col(k - 1);
    }
    return u;
}

Loop primitive_zero_mean(const Loop& u) {
    Loop v = Loop::zero(u.n, u.K);
    for (int k = 1; k <= u.K; ++k) {
        v.a.col(k - 1) = -u.b.col(k - 1) / (2 * kPi * k);
        v.b.col(k - 1) = u.a.col(k - 1) / (2 * kPi * k);
    }
    return v;
}

Loop loop_from_samples(const std::vector<Vec>& samples, int K) {
    const int N = static_cast<int>(samples.size());
    const int n = static_cast<int>(samples.front().size()) / 2;
    Loop u = Loop::zero(n, K);
    for (int i = 0; i < N; ++i)
        for (int k = 1; k <= K; ++k) {
            const double w = 2 * kPi * k * i / N;
            u.a.col(k - 1) += samples[i] * (2.0 * std::cos(w) / N);
            u.b.col(k - 1) += samples[i] * (2.0 * std::sin(w) / N);
        }
    return u;
}

ConjugateValue fenchel_conjugate(const ConvexBody& body, double alpha, const Vec& y) {
    ConjugateValue out;
    if (y.norm() == 0.0) {
        out.gradient = Vec::Zero(y.size());
        return out;
    }
    const double beta = alpha / (alpha - 1);
    const double c = conjugate_constant(alpha);
    Vec x;
    const double v = body.polar_gauge(y, &x);
    out.value = c * std::pow(v, beta);
    out.gradient = c * beta * std::pow(v, beta - 1) * x;
    return out;
}

Mat conjugate_hessian(const ConvexBody& body, double alpha, const Vec& y) {
    if (y.norm() == 0.0) return Mat::Zero(y.size(), y.size());
    const double beta = alpha / (alpha - 1);
    const double c = conjugate_constant(alpha);
    Vec x;
    const double v = body.polar_gauge(y, &x);
    return c * beta * ((beta - 1) * std::pow(v, beta - 2) * x * x.transpose() + std::pow(v, beta - 1) * body.polar_hessian(y));
}

PhiValue phi_with_gradient(const Loop& u, const ConvexBody& body, double alpha) {
    const int n = u.n, K = u.K;
    const Mat J = standard_j(n);
    const Grid g = make_grid(K, K);
    PhiValue out;
    Loop grad = Loop::zero(n, K);
    double quad = 0;
    for (int k = 1; k <= K; ++k) {
        const double w = 1.0 / (4 * kPi * k);
        quad += w * u.a.col(k - 1).dot(J * u.b.col(k - 1));
        grad.a.col(k - 1) = w * J * u.b.col(k - 1);
        grad.b.col(k - 1) = -w * J * u.a.col(k - 1);
    }
    const Mat U = u.a * g.cos_t.transpose() + u.b * g.sin_t.transpose();
    Mat G(2 * n, g.N);
    double h = 0;
    for (int i = 0; i < g.N; ++i) {
        const ConjugateValue cv = fenchel_conjugate(body, alpha, -J * U.col(i));
        h += cv.value;
        G.col(i) = J * cv.gradient;
    }
    grad.a += G * g.cos_t / g.N;
    grad.b += G * g.sin_t / g.N;
    out.value = quad + h / g.N;
    out.gradient = grad.flat();
    return out;
}

double phi(const Loop& u, const ConvexBody& body, double alpha) { return phi_with_gradient(u, body, alpha).value; }

Mat phi_hessian(const Loop& u, const ConvexBody& body, double alpha) {
    const int n = u.n, K = u.K, d = 2 * n;
    const Mat J = standard_j(n);
    const Grid g = make_grid(K, 2 * K);
    const Mat U = u.a * g.cos_t.leftCols(K).transpose() + u.b * g.sin_t.leftCols(K).transpose();
    // Fourier moments of C(t) = Jᵀ (H*)''(−Ju) J up to mode 2K
    std::vector<Mat> cc(2 * K + 1, Mat::Zero(d, d)), cs(2 * K + 1, Mat::Zero(d, d));
    for (int i = 0; i < g.N; ++i) {
        const Mat c = J.transpose() * conjugate_hessian(body, alpha, -J * U.col(i)) * J / g.N;
        cc[0] += c;
        for (int k = 1; k <= 2 * K; ++k) {
            cc[k] += g.cos_t(i, k - 1) * c;
            cs[k] += g.sin_t(i, k - 1) * c;
        }
    }
    auto s_moment = [&cs](int k) { return k >= 0 ? cs[k] : Mat(-cs[-k]); };
    Mat H = Mat::Zero(2 * d * K, 2 * d * K);
    for (int p = 1; p <= K; ++p) {
        const int ap = 2 * d * (p - 1), bp = ap + d;
        for (int q = 1; q <= K; ++q) {
            const int aq = 2 * d * (q - 1), bq = aq + d;
            H.block(ap, aq, d, d) = 0.5 * (cc[std::abs(p - q)] + cc[p + q]);
            H.block(bp, bq, d, d) = 0.5 * (cc[std::abs(p - q)] - cc[p + q]);
            H.block(ap, bq, d, d) = 0.5 * (s_moment(p + q) - s_moment(p - q));
        }
    }
    for (int p = 1; p <= K; ++p) {
        const int ap = 2 * d * (p - 1), bp = ap + d;
        for (int q = 1; q <= K; ++q) {
            const int aq = 2 * d * (q - 1), bq = aq + d;
            H.block(bq, ap, d, d) = H.block(ap, bq, d, d).transpose();
        }
        H.block(ap, bp, d, d) += J / (4 * kPi * p);
        H.block(bp, ap, d, d) += J.transpose() / (4 * kPi * p);
    }
    return 0.5 * (H + H.transpose());
}

double phi_critical_value(double action, double alpha) {
    return -(1 - alpha / 2) * std::pow(2 * action / alpha, alpha / (alpha - 2));
}

MorseData morse_data(const Loop& u, const ConvexBody& body, double alpha, const Tolerances& tol) {
    auto counts = [&](int K) {
        const Mat H = phi_hessian(u.resized(K), body, alpha);
        const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(H, Eigen::EigenvaluesOnly).eigenvalues();
        const double cut = tol.eigen * std::max(1.0, ev.cwiseAbs().maxCoeff());
        std::pair<int, int> c{0, 0};
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) < -cut) ++c.first;
            else if (ev(i) <= cut) ++c.second;
        }
        return c;
    };
    const int k_max = 4 * u.K;
    int K = u.K;
    auto prev = counts(K);
    while (true) {
        const int next = K + std::max(8, K / 4);
        if (next > k_max) break;
        const auto cur = counts(next);
        if (cur == prev) {
            MorseData m{cur.first, cur.second, K, next};
            if (m.nullity < 1 || m.nullity > 2 * u.n) {
                std::ostringstream os;
                os << "Morse nullity " << m.nullity << " outside [1, " << 2 * u.n << "]";
                throw MorseUnstable(os.str());
            }
            return m;
        }
        prev = cur;
        K = next;
    }
    throw MorseUnstable("Morse counts did not stabilise up to K = " + std::to_string(k_max));
}

Loop loop_from_characteristic(const ClosedCharacteristic& c, const ConvexBody& body, double alpha, int K,
                              const Tolerances& tol) {
    // x(t) = s y(τt) with s = τ^{1/(α−2)} solves the unit-period problem; u = ẋ
    const double s = std::pow(c.period, 1.0 / (alpha - 2));
    const Mat J = standard_j(body.half_dim());
    const int N = std::max(64, 8 * K);
    std::vector<Vec> samples;
    for (int i = 0; i < N; ++i) {
        const Vec y = c.trajectory.at(c.period * i / N);
        samples.push_back(std::pow(s, alpha - 1) * J * hamiltonian_alpha(body, alpha, y, tol).gradient);
    }
    return loop_from_samples(samples, K);
}

SolverBudget budget_from_json(const nlohmann::json& j) {
    SolverBudget b;
    b.restarts = j.value("restarts", b.restarts);
    b.K = j.value("K", b.K);
    b.K_search = j.value("K_search", std::min(b.K_search, b.K));
    b.max_iters = j.value("max_iters", b.max_iters);
    b.g_tol = j.value("g_tol", b.g_tol);
    b.seed = j.value("seed", b.seed);
    if (b.restarts < 1 || b.K < 2 || b.K_search < 2 || b.max_iters < 1 || !(b.g_tol > 0))
        throw ConfigError("solver budget needs restarts >= 1, K >= 2, max_iters >= 1, g_tol > 0");
    return b;
}

void to_json(nlohmann::json& j, const SolverBudget& b) {
    j = nlohmann::json{{"restarts", b.restarts}, {"K", b.K},         {"K_search", b.K_search},
                       {"max_iters", b.max_iters}, {"g_tol", b.g_tol}, {"seed", b.seed}};
}

double polish_critical_point(Loop& u, const ConvexBody& body, double alpha, double g_tol, int max_iters) {
    PhiValue cur = phi_with_gradient(u, body, alpha);
    double gn = cur.gradient.norm();
    for (int it = 0; it < max_iters && gn > g_tol; ++it) {
        // minimum-norm Newton step; the S¹ direction is a kernel of ∇²Φ
        Eigen::SelfAdjointEigenSolver<Mat> es(phi_hessian(u, body, alpha));
        const Vec& ev = es.eigenvalues();
        const double cut = 1e-10 * std::max(1e-300, ev.cwiseAbs().maxCoeff());
        Vec coeff = es.eigenvectors().transpose() * cur.gradient;
        for (Eigen::Index i = 0; i < ev.size(); ++i) coeff(i) = std::abs(ev(i)) > cut ? coeff(i) / ev(i) : 0.0;
        const Vec step = -(es.eigenvectors() * coeff);
        const Vec base = u.flat();
        double s = 1.0;
        bool moved = false;
        while (s > 1e-6) {
            Loop trial = Loop::from_flat(u.n, u.K, base + s * step);
            PhiValue tv = phi_with_gradient(trial, body, alpha);
            if (tv.gradient.norm() < gn) {
                u = std::move(trial);
                cur = std::move(tv);
                gn = cur.gradient.norm();
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) break;
    }
    return gn;
}

namespace {

// Nesterov-accelerated descent with backtracking; reaches local minima of Φ
// when Newton from the seed wanders off.
double accelerated_descent(Loop& u, const ConvexBody& body, double alpha, int iters, double g_tol) {
    Vec x = u.flat(), x_prev = x;
    double step = 1.0;
    double gn = 0;
    for (int it = 1; it <= iters; ++it) {
        const Vec y = x + (it - 1.0) / (it + 2.0) * (x - x_prev);
        const PhiValue py = phi_with_gradient(Loop::from_flat(u.n, u.K, y), body, alpha);
        gn = py.gradient.norm();
        if (gn <= g_tol) {
            x = y;
            break;
        }
        while (true) {
            const Vec cand = y - step * py.gradient;
            if (phi(Loop::from_flat(u.n, u.K, cand), body, alpha) <= py.value - 0.5 * step * gn * gn || step < 1e-12) {
                x_prev = x;
                x = cand;
                break;
            }
            step *= 0.5;
        }
        step *= 1.5;
    }
    u = Loop::from_flat(u.n, u.K, x);
    return phi_with_gradient(u, body, alpha).gradient.norm();
}

int dominant_period(const Loop& u) {
    Vec power(u.K);
    for (int k = 0; k < u.K; ++k) power(k) = u.a.col(k).squaredNorm() + u.b.col(k).squaredNorm();
    const double top = power.maxCoeff();
    int f = 0;
    for (int k = 0; k < u.K; ++k)
        if (power(k) > 1e-8 * top) f = std::gcd(f, k + 1);
    return std::max(f, 1);
}

Loop reduce_to_prime(const Loop& u, int f, double alpha) {
    if (f == 1) return u;
    const double s = std::pow(static_cast<double>(f), (alpha - 1) / (alpha - 2));
    Loop p = Loop::zero(u.n, u.K);
    for (int k = 1; k * f <= u.K; ++k) {
        p.a.col(k - 1) = u.a.col(k * f - 1) / s;
        p.b.col(k - 1) = u.b.col(k * f - 1) / s;
    }
    return p;
}

// min over phase shifts (and the antipodal image) of ‖u − v(·+θ)‖ / ‖u‖
double loop_distance(const Loop& u, const Loop& v, bool antipodal) {
    const int K = std::min(u.K, v.K);
    const Loop a = u.resized(K);
    const Loop b = v.resized(K);
    const Vec fa = a.flat();
    const double scale = std::max(1e-300, fa.norm());
    double best = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
        if (sign < 0 && !antipodal) break;
        const Loop bs = b.scaled(sign);
        auto dist = [&](double th) { return (fa - bs.shifted(th).flat()).norm(); };
        constexpr int kGrid = 256;
        int arg = 0;
        double val = dist(0.0);
        for (int i = 1; i < kGrid; ++i) {
            const double d = dist(static_cast<double>(i) / kGrid);
            if (d < val) val = d, arg = i;
        }
        const auto r = boost::math::tools::brent_find_minima(dist, (arg - 1.0) / kGrid, (arg + 1.0) / kGrid, 40);
        best = std::min({best, val, r.second});
    }
    return best / scale;
}

}  // namespace

ClosedCharacteristic recover_orbit(const Loop& u, const ConvexBody& body, double alpha, const Tolerances& tol,
                                   const std::string& label, int* multiplicity, Loop* prime) {
    const int f = dominant_period(u);
    const Loop p = reduce_to_prime(u, f, alpha);
    const Mat J = standard_j(u.n);
    const Vec x0 = fenchel_conjugate(body, alpha, -J * p.at(0.0)).gradient;
    const double lambda = std::pow(hamiltonian_alpha(body, alpha, x0, tol).value, 1.0 / alpha);
    Vec y0 = x0 / lambda;
    y0 /= body.gauge(y0);
    const double tau = std::pow(lambda, alpha - 2);
    if (multiplicity) *multiplicity = f;
    if (prime) *prime = p;
    return integrate_characteristic(body, alpha, y0, tau, tol, label);
}

SearchResult find_critical_points(const ConvexBody& body, double alpha, const SolverBudget& budget,
                                  const Tolerances& tol) {
    const int n = body.half_dim();
    std::mt19937_64 rng(budget.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> amplitude(0.05, 0.6);
    // Newton converges quadratically, so aim well below g_tol; the recovered
    // period and initial point inherit the residual.
    const double search_tol = std::min(budget.g_tol, 1e-12);

    SearchResult result;
    std::vector<Loop> found;  // prime loops at the search truncation
    std::vector<double> found_phi;
    for (int r = 0; r < budget.restarts; ++r) {
        Loop u = Loop::zero(n, budget.K_search);
        Vec first(4 * n);
        for (int i = 0; i < 4 * n; ++i) first(i) = normal(rng);
        first *= amplitude(rng) / first.norm();
        u.a.col(0) = first.head(2 * n);
        u.b.col(0) = first.tail(2 * n);
        for (int k = 1; k < budget.K_search; ++k)
            for (int i = 0; i < 2 * n; ++i) {
                u.a(i, k) = 1e-3 * first.norm() * normal(rng) / (k + 1);
                u.b(i, k) = 1e-3 * first.norm() * normal(rng) / (k + 1);
            }
        const Loop seed = u;
        double gn = 0;
        try {
            gn = polish_critical_point(u, body, alpha, search_tol, 60);
            if (gn > budget.g_tol || u.flat().norm() < 1e-6) {
                u = seed;
                gn = accelerated_descent(u, body, alpha, budget.max_iters, search_tol);
                gn = polish_critical_point(u, body, alpha, search_tol, 60);
            }
        } catch (const Error& e) {
            result.diagnostics.push_back("restart " + std::to_string(r) + ": " + e.what());
            continue;
        }
        const double value = phi(u, body, alpha);
        if (gn > budget.g_tol) {
            std::ostringstream os;
            os << "restart " << r << ": no convergence, |grad Phi| = " << gn;
            result.diagnostics.push_back(os.str());
            continue;
        }
        if (u.flat().norm() < 1e-6 || !(value < 0)) {
            result.diagnostics.push_back("restart " + std::to_string(r) + ": converged to the trivial loop");
            continue;
        }
        ++result.converged_restarts;
        const int f = dominant_period(u);
        const Loop p = reduce_to_prime(u, f, alpha);
        const double pv = phi(p, body, alpha);
        bool duplicate = false;
        for (std::size_t i = 0; i < found.size() && !duplicate; ++i)
            duplicate = std::abs(pv - found_phi[i]) <= 1e-6 * std::abs(found_phi[i]) &&
                        loop_distance(p, found[i], body.symmetric()) < tol.duplicate;
        if (duplicate) continue;
        found.push_back(p);
        found_phi.push_back(pv);
    }

    std::vector<std::size_t> order(found.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return found_phi[x] < found_phi[y]; });
    for (std::size_t idx : order) {
        CriticalPoint cp;
        cp.loop = found[idx].resized(budget.K);
        cp.gradient_norm = polish_critical_point(cp.loop, body, alpha, std::min(budget.g_tol, 1e-12), 20);
        if (cp.gradient_norm > budget.g_tol) {
            std::ostringstream os;
            os << "refinement at K = " << budget.K << " stalled at |grad Phi| = " << cp.gradient_norm;
            result.diagnostics.push_back(os.str());
            continue;
        }
        // truncated iterates of one orbit only coincide after refinement
        const double refined_phi = phi(cp.loop, body, alpha);
        bool duplicate = false;
        for (std::size_t i = 0; i < result.points.size() && !duplicate; ++i)
            duplicate = std::abs(refined_phi - result.points[i].phi_value) <= 1e-6 * std::abs(refined_phi) &&
                        loop_distance(cp.loop, result.points[i].loop, body.symmetric()) < tol.duplicate;
        if (duplicate) continue;
        const std::string label = "y" + std::to_string(result.points.size() + 1);
        try {
            cp.orbit = recover_orbit(cp.loop, body, alpha, tol, label, &cp.multiplicity);
        } catch (const Error& e) {
            result.diagnostics.push_back(label + ": " + e.what());
            continue;
        }
        cp.phi_value = refined_phi;
        cp.morse = morse_data(cp.loop, body, alpha, tol);
        result.points.push_back(std::move(cp));
    }
    return result;
}

}  // namespace cchar
