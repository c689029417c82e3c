#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace coldloop::stats {

enum class Method { kruskal_wallis, wilcoxon_exact, wilcoxon_normal };
std::string_view to_string(Method method);

struct TestResult {
    double statistic = 0.0;  // H for Kruskal-Wallis, U of the first sample for Wilcoxon
    int df = 0;              // 0 for Wilcoxon
    double p_value = 1.0;
    Method method = Method::kruskal_wallis;
};

/// Average ranks (1-based) of `values`, ties sharing the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Sum of t^3 - t over tie groups of size t.
double tie_term(std::span<const double> values);

/// Tie-corrected Kruskal-Wallis H with df = k - 1. Needs at least two
/// non-empty groups. All observations tied gives H = 0, p = 1.
TestResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// Largest combined sample size that uses the exact null distribution.
inline constexpr std::size_t kExactWilcoxonLimit = 20;

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. Tie-free inputs with
/// n_a + n_b <= 20 use the exact distribution of U; everything else uses the
/// normal approximation with tie and continuity corrections.
TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg adjusted p-values, returned in input order.
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi_square_sf(double x, int df);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

}  // namespace coldloop::stats
