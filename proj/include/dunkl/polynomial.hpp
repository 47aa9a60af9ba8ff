#pragma once

// Sparse multivariate polynomials with double coefficients. All Dunkl
// operators act exactly on this representation; degrees at desk scale stay
// small (<= 12), so round-off in the coefficient arithmetic is negligible.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dunkl/common.hpp"

namespace dunkl {

using MultiIndex = std::vector<int>;

struct MultiPoly {
    int dim = 0;
    std::map<MultiIndex, double> terms;  // ordered map keeps iteration deterministic

    MultiPoly() = default;
    explicit MultiPoly(int n) : dim(n) {}

    static MultiPoly constant(int n, double c) {
        MultiPoly p(n);
        if (c != 0.0) p.terms[MultiIndex(n, 0)] = c;
        return p;
    }

    static MultiPoly monomial(int n, MultiIndex k, double c) {
        MultiPoly p(n);
        if (c != 0.0) p.terms[std::move(k)] = c;
        return p;
    }

    static MultiPoly variable(int n, int j) {
        MultiIndex k(n, 0);
        k[j] = 1;
        return monomial(n, std::move(k), 1.0);
    }

    bool empty() const { return terms.empty(); }

    int total_degree() const {
        int d = 0;
        for (const auto& [k, c] : terms) {
            (void)c;
            int s = 0;
            for (int e : k) s += e;
            d = std::max(d, s);
        }
        return d;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [k, c] : terms) {
            (void)k;
            m = std::max(m, std::fabs(c));
        }
        return m;
    }

    double eval(const Vec& x) const {
        double s = 0.0;
        for (const auto& [k, c] : terms) {
            double t = c;
            for (int i = 0; i < dim; ++i)
                for (int e = 0; e < k[i]; ++e) t *= x[i];
            s += t;
        }
        return s;
    }

    MultiPoly& add_term(const MultiIndex& k, double c) {
        auto it = terms.find(k);
        if (it == terms.end()) {
            if (c != 0.0) terms[k] = c;
        } else {
            it->second += c;
            if (it->second == 0.0) terms.erase(it);
        }
        return *this;
    }

    MultiPoly operator+(const MultiPoly& q) const {
        MultiPoly r(*this);
        for (const auto& [k, c] : q.terms) r.add_term(k, c);
        return r;
    }

    MultiPoly operator-(const MultiPoly& q) const {
        MultiPoly r(*this);
        for (const auto& [k, c] : q.terms) r.add_term(k, -c);
        return r;
    }

    MultiPoly operator*(double c) const {
        MultiPoly r(dim);
        if (c == 0.0) return r;
        for (const auto& [k, v] : terms) r.terms[k] = v * c;
        return r;
    }

    MultiPoly operator*(const MultiPoly& q) const {
        MultiPoly r(dim);
        for (const auto& [ka, ca] : terms)
            for (const auto& [kb, cb] : q.terms) {
                MultiIndex k(dim);
                for (int i = 0; i < dim; ++i) k[i] = ka[i] + kb[i];
                r.add_term(k, ca * cb);
            }
        return r;
    }

    MultiPoly derivative(int j) const {
        MultiPoly r(dim);
        for (const auto& [k, c] : terms) {
            if (k[j] == 0) continue;
            MultiIndex kk(k);
            kk[j] -= 1;
            r.add_term(kk, c * k[j]);
        }
        return r;
    }

    /// p(M x): substitute each variable by the corresponding linear form.
    MultiPoly compose_linear(const Mat& m) const {
        std::vector<MultiPoly> lin(dim, MultiPoly(dim));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                if (m(i, j) != 0.0) lin[i].add_term(MultiIndex([&] {
                                                        MultiIndex k(dim, 0);
                                                        k[j] = 1;
                                                        return k;
                                                    }()),
                                                    m(i, j));
        MultiPoly r(dim);
        for (const auto& [k, c] : terms) {
            MultiPoly t = MultiPoly::constant(dim, c);
            for (int i = 0; i < dim; ++i)
                for (int e = 0; e < k[i]; ++e) t = t * lin[i];
            r = r + t;
        }
        return r;
    }

    /// Drop coefficients below rel_eps times the largest magnitude.
    MultiPoly trimmed(double rel_eps = 1e-13) const {
        const double cutoff = rel_eps * max_abs_coeff();
        MultiPoly r(dim);
        for (const auto& [k, c] : terms)
            if (std::fabs(c) > cutoff) r.terms[k] = c;
        return r;
    }

    double max_coeff_diff(const MultiPoly& q) const {
        double m = 0.0;
        for (const auto& [k, c] : terms) {
            auto it = q.terms.find(k);
            const double o = (it == q.terms.end()) ? 0.0 : it->second;
            m = std::max(m, std::fabs(c - o));
        }
        for (const auto& [k, c] : q.terms)
            if (!terms.count(k)) m = std::max(m, std::fabs(c));
        return m;
    }

    /// (multi-index, coefficient) rows; used as a test-fixture format.
    std::string to_csv() const {
        std::ostringstream os;
        for (const auto& [k, c] : terms) {
            for (int e : k) os << e << ",";
            os << fmt17(c) << "\n";
        }
        return os.str();
    }

    static MultiPoly from_csv(int n, const std::string& text) {
        MultiPoly p(n);
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tok;
            MultiIndex k;
            double coeff = 0.0;
            std::vector<std::string> cols;
            while (std::getline(ls, tok, ',')) cols.push_back(tok);
            if (static_cast<int>(cols.size()) != n + 1)
                throw error("MultiPoly::from_csv: expected " + std::to_string(n + 1) +
                            " columns");
            for (int i = 0; i < n; ++i) k.push_back(std::stoi(cols[i]));
            coeff = std::stod(cols[n]);
            p.add_term(k, coeff);
        }
        return p;
    }
};

}  // namespace dunkl
