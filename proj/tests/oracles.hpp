// Independent reference implementations used to cross-check the library.
// They favour the most literal form of each definition over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

// Two-sided exact rank-sum p-value by enumerating every way of choosing which
// ranks belong to the first sample. Inputs must be tie-free.
inline double wilcoxon_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> all(a);
    all.insert(all.end(), b.begin(), b.end());
    const std::size_t n = all.size();
    const std::size_t na = a.size();

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return all[i] < all[j]; });
    std::vector<int> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[idx[r]] = static_cast<int>(r) + 1;

    int observed = 0;
    for (std::size_t i = 0; i < na; ++i) observed += rank[i];
    const double mean = na * (n + 1) / 2.0;
    const double dev = std::abs(observed - mean);

    long total = 0;
    long extreme = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
        int sum = 0;
        for (std::size_t r = 0; r < n; ++r)
            if (mask & (1u << r)) sum += static_cast<int>(r) + 1;
        ++total;
        if (std::abs(sum - mean) >= dev - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

// BH by the textbook step-up: for each rank i take the minimum of m p_(j) / j
// over j >= i, computed with a full inner loop.
inline std::vector<double> bh_stepwise(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = i; j < m; ++j)
            best = std::min(best, p[order[j]] * static_cast<double>(m) / static_cast<double>(j + 1));
        out[order[i]] = best;
    }
    return out;
}

// Least squares through the 2x2 normal equations.
inline std::pair<double, double> normal_equations(const std::vector<double>& x,
                                                  const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    const double a = (n * sxy - sx * sy) / det;
    const double b = (sxx * sy - sx * sxy) / det;
    return {a, b};
}

// Kruskal-Wallis H straight from the rank-sum formula, with the tie divisor.
inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const double n = static_cast<double>(all.size());
    auto rank_of = [&](double v) {
        double less = 0, equal = 0;
        for (double w : all) {
            if (w < v) ++less;
            if (w == v) ++equal;
        }
        return less + (equal + 1) / 2.0;
    };
    double h = 0;
    for (const auto& g : groups) {
        double r = 0;
        for (double v : g) r += rank_of(v);
        h += r * r / static_cast<double>(g.size());
    }
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1);
    std::vector<double> sorted(all);
    std::sort(sorted.begin(), sorted.end());
    double ties = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double c = 1 - ties / (n * n * n - n);
    return c > 0 ? h / c : 0.0;
}

}  // namespace oracle
