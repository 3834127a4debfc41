// Shared test support: brute-force O(n^2) reference implementations of the
// rank metrics, a realistic synthetic instance generator, and small
// construction helpers. The brute-force versions are deliberately written
// as literal pair loops so they share no code with the fast paths they
// check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "uqscore/domain.hpp"
#include "uqscore/mixture.hpp"
#include "uqscore/rng.hpp"

namespace testsupport {

inline uqscore::ScoreSeries make_series(const std::vector<double>& values,
                                        const std::string& name = "score") {
    uqscore::ScoreSeries series;
    series.name = name;
    for (std::size_t i = 0; i < values.size(); ++i) {
        series.values.emplace_back("r" + std::to_string(i), values[i]);
    }
    return series;
}

// Pair loop over (correct, misclassified) pairs, half credit on score ties.
inline double brute_uq_auc(const std::vector<double>& scores, const std::vector<int>& mis) {
    double credit = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (mis[i] != 0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (mis[j] != 1) continue;
            ++pairs;
            if (scores[i] < scores[j]) {
                credit += 1.0;
            } else if (scores[i] == scores[j]) {
                credit += 0.5;
            }
        }
    }
    return credit / static_cast<double>(pairs);
}

// Pair loop over pairs with distinct gaps; the lower-gap sample should
// score lower. Half credit on score ties.
inline double brute_uq_c_index(const std::vector<double>& scores,
                               const std::vector<double>& deltas,
                               std::uint64_t* comparable = nullptr) {
    double credit = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (!(deltas[i] < deltas[j])) continue;
            ++pairs;
            if (scores[i] < scores[j]) {
                credit += 1.0;
            } else if (scores[i] == scores[j]) {
                credit += 0.5;
            }
        }
    }
    if (comparable != nullptr) *comparable = pairs;
    return credit / static_cast<double>(pairs);
}

// Kendall tau-b by direct enumeration of concordant / discordant pairs.
inline double brute_kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double concordant = 0.0;
    double discordant = 0.0;
    std::uint64_t ties_a = 0;
    std::uint64_t ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if ((da > 0.0) == (db > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    const double denom =
        std::sqrt(n0 - static_cast<double>(ties_a)) * std::sqrt(n0 - static_cast<double>(ties_b));
    return (concordant - discordant) / denom;
}

// Recounts the error rate of every prefix from scratch (ties in score order
// by position, matching the fast path when no ids are supplied).
inline double brute_g_auc(const std::vector<double>& scores, const std::vector<int>& mis) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (scores[l] != scores[r]) return scores[l] < scores[r];
        return l < r;
    });
    double total = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        std::size_t errors = 0;
        for (std::size_t i = 0; i < k; ++i) errors += static_cast<std::size_t>(mis[order[i]]);
        total += static_cast<double>(errors) / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

// Pair loop form: for every misclassified sample, the fraction of correct
// samples scoring strictly below it (half credit on ties), summed over the
// n^2 grid.
inline double brute_h_auc(const std::vector<double>& scores, const std::vector<int>& mis) {
    const std::size_t n = scores.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mis[i] != 1) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (mis[j] != 0) continue;
            if (scores[j] < scores[i]) {
                total += 1.0;
            } else if (scores[j] == scores[i]) {
                total += 0.5;
            }
        }
    }
    return total / (static_cast<double>(n) * static_cast<double>(n));
}

inline double brute_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// A deterministic imperfect predictor: the mixture posterior log-odds,
// rescaled and shifted, squashed back to a probability. scale != 1 or
// shift != 0 moves it away from the exact posterior while keeping it a
// plausible classifier output.
inline uqscore::PredictionRecord tempered_prediction(const uqscore::MixtureSpec& spec,
                                                     const uqscore::LabeledSample& sample,
                                                     double scale, double shift) {
    const uqscore::ProbVector post = uqscore::posterior(spec, sample.x);
    double log_odds;
    if (post.p1() <= 0.0) {
        log_odds = -745.0;
    } else if (post.p0() <= 0.0) {
        log_odds = 745.0;
    } else {
        log_odds = std::log(post.p1()) - std::log(post.p0());
    }
    const double z = scale * log_odds + shift;
    const double q = stable_sigmoid(z);
    return uqscore::PredictionRecord::from_members(
        sample.id, {uqscore::ProbVector::checked(1.0 - q, q)}, {{0.0, z}});
}

struct MetricInstance {
    std::vector<double> scores;
    std::vector<int> mis;
    std::vector<double> deltas;
    std::vector<std::string> ids;
    double acc = 0.0;
};

// Draws one plausible classifier evaluation: mixture data, an imperfect
// tempered-posterior predictor, and a score column that is the predictor's
// own uncertainty plus noise. Scores are continuous so ties have measure
// zero; a tie-breaking jitter guards the residual risk. Both outcome
// classes are always present.
inline MetricInstance draw_metric_instance(uqscore::Rng& rng, std::size_t n) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        uqscore::MixtureSpec spec;
        const double separation = 1.5 + 2.5 * rng.uniform();
        spec.mu0 = {0.0, 0.0};
        spec.mu1 = {separation, 0.0};
        spec.sigma = 1.0;
        spec.p = 0.5;
        spec.tau = 1.0;

        const double scale = 0.6 + rng.uniform();
        const double shift = -0.4 + 0.8 * rng.uniform();
        const double noise = 0.25 * rng.uniform();

        std::vector<uqscore::LabeledSample> samples =
            uqscore::sample_points(spec, n, rng.next_u64(), false);

        MetricInstance inst;
        inst.scores.reserve(n);
        inst.mis.reserve(n);
        inst.deltas.reserve(n);
        std::size_t n_wrong = 0;
        for (const auto& s : samples) {
            const uqscore::PredictionRecord pred = tempered_prediction(spec, s, scale, shift);
            const int mis = uqscore::mis_indicator(s.y, pred.y_hat());
            n_wrong += static_cast<std::size_t>(mis);
            const double gap = 1.0 - std::max(pred.mean_prob().p0(), pred.mean_prob().p1());
            inst.scores.push_back(gap + noise * std::fabs(rng.normal()) +
                                  1e-12 * rng.uniform());
            inst.mis.push_back(mis);
            inst.deltas.push_back(uqscore::gap_delta(pred.mean_prob(), s.y));
            inst.ids.push_back(s.id);
        }
        if (n_wrong == 0 || n_wrong == n) continue;
        inst.acc = 1.0 - static_cast<double>(n_wrong) / static_cast<double>(n);

        std::vector<double> sorted = inst.scores;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
        return inst;
    }
    throw std::runtime_error("could not draw a usable metric instance");
}

} // namespace testsupport
