#pragma once

// Small shared utilities: dense vectors/matrices at desk-scale dimensions,
// error types, deterministic parallel loops, and float formatting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dunkl {

using Vec = std::vector<double>;

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return dot(x, x); }
inline double norm(const Vec& x) { return std::sqrt(norm2(x)); }

inline Vec sub(const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

inline Vec add(const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

inline Vec scaled(const Vec& x, double c) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = c * x[i];
    return r;
}

inline double dist(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Square dense matrix, row-major. Sizes here are tiny (N <= 3, group
/// elements), so no external linear algebra is pulled in.
struct Mat {
    int n = 0;
    std::vector<double> a;

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    Vec apply(const Vec& x) const {
        Vec y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat mul(const Mat& b) const {
        Mat c(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const double v = (*this)(i, k);
                if (v == 0.0) continue;
                for (int j = 0; j < n; ++j) c(i, j) += v * b(k, j);
            }
        return c;
    }

    Mat transpose() const {
        Mat t(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double max_diff(const Mat& b) const {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b.a[i]));
        return m;
    }
};

/// sigma_alpha(x) = x - 2 <x,alpha>/|alpha|^2 alpha as a matrix.
inline Mat reflection_matrix(const Vec& alpha) {
    const int n = static_cast<int>(alpha.size());
    const double nrm2 = norm2(alpha);
    Mat m = Mat::identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) -= 2.0 * alpha[i] * alpha[j] / nrm2;
    return m;
}

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

/// Raised when an integral cannot be certified at the declared tolerance;
/// carries the best value and its error estimate.
struct quadrature_error : error {
    double best_value;
    double error_estimate;
    quadrature_error(const std::string& what, double best, double est)
        : error(what), best_value(best), error_estimate(est) {}
};

/// Round-trip exact float formatting (17 significant digits).
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline unsigned worker_count() {
    if (const char* env = std::getenv("DUNKL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Deterministic parallel loop: the work is split by index, results must be
/// written to preallocated slots so the outcome is independent of scheduling.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace dunkl
