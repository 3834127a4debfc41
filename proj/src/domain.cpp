#include "uqscore/domain.hpp"

#include <cmath>
#include <unordered_set>

namespace uqscore {

namespace {

void require_finite(double p0, double p1) {
    if (!std::isfinite(p0) || !std::isfinite(p1)) {
        throw InvalidParameterError("probability entries must be finite");
    }
}

} // namespace

ProbVector ProbVector::checked(double p0, double p1) {
    require_finite(p0, p1);
    if (p0 < -1e-12 || p1 < -1e-12 || p0 > 1.0 + 1e-12 || p1 > 1.0 + 1e-12) {
        throw InvalidParameterError("probability entries must lie in [0,1]");
    }
    if (std::fabs(p0 + p1 - 1.0) > 1e-12) {
        throw InvalidParameterError("probability entries must sum to 1 within 1e-12");
    }
    auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    return ProbVector(clamp01(p0), clamp01(p1));
}

ProbVector ProbVector::normalized(double p0, double p1, double tol) {
    require_finite(p0, p1);
    if (p0 < -1e-12 || p1 < -1e-12) {
        throw InvalidParameterError("probability entries must be non-negative");
    }
    if (std::fabs(p0 + p1 - 1.0) > tol) {
        throw InvalidParameterError("probability entries must sum to 1 within tolerance");
    }
    const double sum = p0 + p1;
    double q1 = p1 / sum;
    if (q1 < 0.0) q1 = 0.0;
    if (q1 > 1.0) q1 = 1.0;
    return ProbVector(1.0 - q1, q1);
}

PredictionRecord PredictionRecord::from_members(std::string sample_id,
                                                std::vector<ProbVector> members,
                                                std::vector<std::array<double, 2>> logits) {
    if (sample_id.empty()) {
        throw InvalidParameterError("prediction record needs a sample id");
    }
    if (members.empty()) {
        throw InvalidParameterError("prediction record needs at least one member");
    }
    if (!logits.empty() && logits.size() != members.size()) {
        throw InvalidParameterError("logits, when present, must match the member count");
    }
    // Fixed left-to-right summation keeps the mean reproducible bit for bit.
    double s0 = 0.0;
    double s1 = 0.0;
    for (const ProbVector& m : members) {
        s0 += m.p0();
        s1 += m.p1();
    }
    const double n = static_cast<double>(members.size());
    PredictionRecord rec;
    rec.sample_id_ = std::move(sample_id);
    rec.members_ = std::move(members);
    rec.logits_ = std::move(logits);
    rec.mean_prob_ = ProbVector::checked(s0 / n, s1 / n);
    rec.y_hat_ = rec.mean_prob_.argmax();
    return rec;
}

void ScoreSeries::validate() const {
    std::unordered_set<std::string> seen;
    seen.reserve(values.size());
    for (const auto& [id, score] : values) {
        if (!std::isfinite(score)) {
            throw InvalidParameterError("score series '" + name + "' has a non-finite score for id " + id);
        }
        if (!seen.insert(id).second) {
            throw InvalidParameterError("score series '" + name + "' has duplicate id " + id);
        }
    }
}

std::vector<double> ScoreSeries::scores() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& [id, score] : values) out.push_back(score);
    return out;
}

int mis_indicator(int y, int y_hat) {
    if ((y != 0 && y != 1) || (y_hat != 0 && y_hat != 1)) {
        throw InvalidParameterError("labels must be 0 or 1");
    }
    return y == y_hat ? 0 : 1;
}

double gap_delta(const ProbVector& probs, int y) {
    if (y != 0 && y != 1) {
        throw InvalidParameterError("labels must be 0 or 1");
    }
    return 1.0 - probs[y];
}

double varphi_of(const ProbVector& probs, int bayes_label) {
    if (bayes_label != 0 && bayes_label != 1) {
        throw InvalidParameterError("labels must be 0 or 1");
    }
    return 1.0 - probs[bayes_label];
}

} // namespace uqscore
