#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uqscore/errors.hpp"

namespace uqscore {

// Binary probability vector. Entries stay in [0,1] and sum to one within
// 1e-12; factories below are the only way to build one, so downstream code
// never re-checks.
class ProbVector {
public:
    // Accepts values that already satisfy the invariant (slack 1e-12).
    static ProbVector checked(double p0, double p1);

    // Accepts values off by up to `tol` and rescales them. Anything worse
    // is rejected, as are negative entries.
    static ProbVector normalized(double p0, double p1, double tol = 1e-9);

    double operator[](int label) const { return label == 0 ? p0_ : p1_; }
    double p0() const { return p0_; }
    double p1() const { return p1_; }

    // Ties resolve to label 0.
    int argmax() const { return p1_ > p0_ ? 1 : 0; }

    bool operator==(const ProbVector& other) const {
        return p0_ == other.p0_ && p1_ == other.p1_;
    }

private:
    ProbVector(double p0, double p1) : p0_(p0), p1_(p1) {}
    double p0_ = 0.5;
    double p1_ = 0.5;
};

struct LabeledSample {
    std::string id;
    std::array<double, 2> x{0.0, 0.0};
    int y = 0; // in {0, 1}
};

// Output of one predictor on one sample. `members` holds the per-member
// predictive distributions (a single entry for plain softmax predictors),
// `logits` the matching raw outputs when the predictor exposes them.
class PredictionRecord {
public:
    static PredictionRecord from_members(std::string sample_id,
                                         std::vector<ProbVector> members,
                                         std::vector<std::array<double, 2>> logits = {});

    const std::string& sample_id() const { return sample_id_; }
    const std::vector<ProbVector>& members() const { return members_; }
    const std::vector<std::array<double, 2>>& logits() const { return logits_; }
    bool has_logits() const { return !logits_.empty(); }
    const ProbVector& mean_prob() const { return mean_prob_; }
    int y_hat() const { return y_hat_; }

private:
    PredictionRecord() : mean_prob_(ProbVector::checked(0.5, 0.5)) {}

    std::string sample_id_;
    std::vector<ProbVector> members_;
    std::vector<std::array<double, 2>> logits_;
    ProbVector mean_prob_;
    int y_hat_ = 0;
};

// Per-sample quantities that need the generative model: the posterior, the
// Bayes decision, and the reference uncertainty values derived from them.
struct OracleAnnotation {
    std::string sample_id;
    ProbVector posterior = ProbVector::checked(0.5, 0.5);
    int bayes_label = 0;
    double phi = 0.0;    // 1 - posterior[y_hat]
    double varphi = 0.0; // 1 - mean_prob[bayes_label]
    double delta = 0.0;  // 1 - mean_prob[y]
    int mis = 0;         // 1{y != y_hat}
    int bayes_agree = 0; // 1{y_hat == bayes_label}
};

// Named score column aligned with a prediction set.
struct ScoreSeries {
    std::string name;
    std::vector<std::pair<std::string, double>> values; // (sample_id, score)

    // Throws on duplicate ids or non-finite scores.
    void validate() const;
    std::vector<double> scores() const;
};

// 1{y != y_hat}; both arguments must be in {0, 1}.
int mis_indicator(int y, int y_hat);

// 1 - probs[y]: how much mass the prediction puts off the realized label.
double gap_delta(const ProbVector& probs, int y);

// 1 - probs[bayes_label]: commitment of the prediction to the non-optimal
// decision.
double varphi_of(const ProbVector& probs, int bayes_label);

} // namespace uqscore
