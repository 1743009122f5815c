// Independent reference computations used only by the tests.
#ifndef MTOCT_TESTS_ORACLES_HPP
#define MTOCT_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace oracle {

/// Central differences of `f` at `x` with step `h`.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        probe(d) = x(d) + h;
        const double up = f(probe);
        probe(d) = x(d) - h;
        const double down = f(probe);
        probe(d) = x(d);
        g(d) = (up - down) / (2.0 * h);
    }
    return g;
}

/// max_d |a_d - b_d| / max(|a_d|, |b_d|, floor)
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        const double scale = std::max({std::abs(a(d)), std::abs(b(d)), floor});
        worst = std::max(worst, std::abs(a(d) - b(d)) / scale);
    }
    return worst;
}

/// Two-sided exact Wilcoxon p-value by enumerating all 2^n sign patterns over
/// the tie-averaged ranks of |x - y| (zeros dropped).
inline double wilcoxon_brute_force(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != y[i]) d.push_back(x[i] - y[i]);
    const std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) ++less;
            if (std::abs(d[j]) == std::abs(d[i])) ++equal;
        }
        rank[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    double w_plus = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += rank[i];
        if (d[i] > 0) w_plus += rank[i];
    }
    const double w = std::min(w_plus, total - w_plus);
    std::uint64_t hits = 0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1U) s += rank[i];
        if (s <= w + 1e-9) ++hits;
    }
    return std::min(1.0, 2.0 * static_cast<double>(hits) / static_cast<double>(patterns));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle

#endif
