#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uqscore/domain.hpp"

namespace uqscore {

// Probability that a sample scored as safer really is safer, judged by the
// crisp misclassification indicator. Ties in score earn half credit.
// Computed from rank sums in O(n log n).
double uq_auc(std::span<const double> scores, std::span<const int> mis);

// Concordance between the score order and the order of the soft
// misclassification gap. Only pairs with distinct gaps compare; score ties
// earn half credit. O(n log n) via a Fenwick tree over score ranks.
// comparable_pairs, when given, receives the comparison-pair count.
double uq_c_index(std::span<const double> scores, std::span<const double> deltas,
                  std::uint64_t* comparable_pairs = nullptr);

// Mean over k of the error rate among the k lowest-score samples, i.e. a
// Riemann sum of the selective risk over the coverage grid k/n. Score ties
// order by id (by position when ids are not supplied).
double g_auc_direct(std::span<const double> scores, std::span<const int> mis,
                    std::span<const std::string> ids = {});

// Riemann sum of the low-score acceptance curve evaluated at the scores of
// the misclassified samples, with half credit on ties.
double h_auc_direct(std::span<const double> scores, std::span<const int> mis);

double g_auc_from_lemma(double uq_auc_value, double acc);
double h_auc_from_lemma(double uq_auc_value, double acc);

// Kendall tau-b with tie corrections, O(n log n) merge counting.
double kendall_tau(std::span<const double> a, std::span<const double> b);

struct CorrelationReport {
    double kendall_tau = 0.0;
    double pearson_r = 0.0;
    double pearson_ci_low = 0.0;
    double pearson_ci_high = 0.0;
    double alpha = 0.95;
};

// Pearson correlation with a Fisher z confidence interval at level alpha.
// Degenerate |r| = 1 collapses the interval onto r. Needs n >= 4.
CorrelationReport pearson_fisher(std::span<const double> a, std::span<const double> b,
                                 double alpha = 0.95);

// Inverse standard normal CDF (rational approximation plus one refinement).
double normal_quantile(double p);

struct MetricReport {
    double uq_auc = 0.0;
    double uq_c_index = 0.0;
    double g_auc_direct = 0.0;
    double g_auc_lemma = 0.0;
    double h_auc_lemma = 0.0;
    double acc = 0.0;
    std::uint64_t n = 0;
    std::uint64_t comparable_pairs = 0;
    std::string provenance;

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
};

// Bundles every metric for one score column. mis and deltas are aligned
// with scores; ids (optional) pin the tie order of g_auc_direct.
MetricReport compute_metric_report(std::span<const double> scores, std::span<const int> mis,
                                   std::span<const double> deltas,
                                   std::span<const std::string> ids = {},
                                   std::string provenance = "");

// ScoreSeries front ends; values must be aligned with the per-sample rows.
double uq_auc(const ScoreSeries& series, std::span<const int> mis);
double uq_c_index(const ScoreSeries& series, std::span<const double> deltas,
                  std::uint64_t* comparable_pairs = nullptr);

} // namespace uqscore
