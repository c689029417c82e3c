#include "coldloop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "coldloop/error.hpp"

namespace coldloop::stats {

namespace {

// Series expansion of the lower regularized gamma P(a, x); converges for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); converges for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double normal_two_sided(double z) { return std::erfc(z / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::kruskal_wallis: return "kruskal_wallis";
        case Method::wilcoxon_exact: return "wilcoxon_exact";
        case Method::wilcoxon_normal: return "wilcoxon_normal";
    }
    return "?";
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });

    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

double tie_term(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        total += t * t * t - t;
        i = j;
    }
    return total;
}

TestResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw ValidationError("Kruskal-Wallis needs at least two groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw ValidationError("Kruskal-Wallis groups must be non-empty");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    for (double v : pooled)
        if (!std::isfinite(v)) throw ValidationError("Kruskal-Wallis input must be finite");

    const auto ranks = average_ranks(pooled);
    const double n = static_cast<double>(pooled.size());

    double weighted = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        weighted += rank_sum * rank_sum / static_cast<double>(g.size());
        offset += g.size();
    }

    TestResult result;
    result.method = Method::kruskal_wallis;
    result.df = static_cast<int>(groups.size()) - 1;

    const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
    if (correction <= 0.0) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    const double h = (12.0 / (n * (n + 1.0)) * weighted - 3.0 * (n + 1.0)) / correction;
    // Rounding can leave a tiny negative H for groups with equal mean ranks.
    result.statistic = std::max(0.0, h);
    result.p_value = chi_square_sf(result.statistic, result.df);
    return result;
}

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("Wilcoxon samples must be non-empty");

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled)
        if (!std::isfinite(v)) throw ValidationError("Wilcoxon input must be finite");

    const auto ranks = average_ranks(pooled);
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n = na + nb;

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
    const double u = rank_sum_a - static_cast<double>(na * (na + 1)) / 2.0;

    TestResult result;
    result.statistic = u;
    result.df = 0;
    const double ties = tie_term(pooled);

    if (ties == 0.0 && n <= kExactWilcoxonLimit) {
        // counts[k][s]: number of k-subsets of ranks 1..m with rank sum s.
        const std::size_t max_sum = n * (n + 1) / 2;
        std::vector<std::vector<double>> counts(na + 1, std::vector<double>(max_sum + 1, 0.0));
        counts[0][0] = 1.0;
        for (std::size_t r = 1; r <= n; ++r)
            for (std::size_t k = std::min(r, na); k >= 1; --k)
                for (std::size_t s = max_sum; s >= r; --s) counts[k][s] += counts[k - 1][s - r];

        const std::size_t base = na * (na + 1) / 2;
        const auto u_obs = static_cast<std::size_t>(std::llround(u));
        double total = 0.0, lower = 0.0, upper = 0.0;
        for (std::size_t s = base; s <= max_sum; ++s) {
            const double c = counts[na][s];
            if (c == 0.0) continue;
            total += c;
            if (s - base <= u_obs) lower += c;
            if (s - base >= u_obs) upper += c;
        }
        result.method = Method::wilcoxon_exact;
        result.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        return result;
    }

    result.method = Method::wilcoxon_normal;
    const double dna = static_cast<double>(na);
    const double dnb = static_cast<double>(nb);
    const double dn = static_cast<double>(n);
    const double mean = dna * dnb / 2.0;
    const double var = dna * dnb / 12.0 * ((dn + 1.0) - ties / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
        result.p_value = 1.0;
        return result;
    }
    const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
    result.p_value = std::clamp(normal_two_sided(z), 0.0, 1.0);
    return result;
}

std::vector<double> benjamini_hochberg(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p-values must lie in [0, 1]");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return p_values[l] < p_values[r]; });

    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        const double rank = static_cast<double>(i + 1);
        running = std::min(running, static_cast<double>(m) * p_values[order[i]] / rank);
        adjusted[order[i]] = std::min(1.0, running);
    }
    return adjusted;
}

double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw ValidationError("gamma_q needs a > 0");
    if (!(x >= 0.0)) throw ValidationError("gamma_q needs x >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw ValidationError("chi-square df must be at least 1");
    if (!(x >= 0.0)) throw ValidationError("chi-square statistic must be non-negative");
    return gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace coldloop::stats
