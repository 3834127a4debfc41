#pragma once

#include <array>
#include <string>
#include <vector>

#include "uqscore/domain.hpp"

namespace uqscore {

// Scoring functions map a prediction record to a scalar where larger means
// less trustworthy. Natural logarithms throughout.
enum class ScoringKind {
    entropy,            // entropy of the mean predictive distribution
    gap,                // 1 - mean_prob[y_hat]
    variance,           // spread of the predicted-class probability
    total_entropy,      // alias computation of entropy, ensemble wording
    aleatoric_entropy,  // mean of per-member entropies
    mutual_information, // total - aleatoric, clamped at 0
    free_energy,        // -T log sum exp(logit / T)
};

struct ScoringSpec {
    ScoringKind kind = ScoringKind::entropy;
    double temperature = 1.0; // only read by free_energy

    static ScoringSpec parse(const std::string& name, double temperature = 1.0);
    std::string name() const;
    void validate() const;

    // Kinds that only make statistical sense with several members.
    bool ensemble_flavored() const;
    bool needs_logits() const;
};

std::vector<std::string> scoring_names();

// Shannon entropy with the 0 log 0 = 0 convention.
double entropy(const ProbVector& probs);

double total_entropy(const PredictionRecord& rec);
double aleatoric_entropy(const PredictionRecord& rec);

// Clamps tiny negative values (> -1e-12) caused by rounding to zero.
double mutual_information(const PredictionRecord& rec);

double free_energy(const std::array<double, 2>& logits, double temperature = 1.0);

// Single member: Bernoulli variance p1 (1 - p1) of the prediction.
// Several members: population variance across members of the probability
// they assign to the predicted class.
double variance_score(const PredictionRecord& rec);

double gap_score(const PredictionRecord& rec);

double evaluate_scoring(const ScoringSpec& spec, const PredictionRecord& rec);

ScoreSeries score_records(const ScoringSpec& spec, const std::vector<PredictionRecord>& records);

} // namespace uqscore
