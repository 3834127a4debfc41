#include "uqscore/scoring.hpp"

#include <cmath>

#include "uqscore/errors.hpp"

namespace uqscore {

ScoringSpec ScoringSpec::parse(const std::string& name, double temperature) {
    ScoringSpec spec;
    spec.temperature = temperature;
    if (name == "entropy") {
        spec.kind = ScoringKind::entropy;
    } else if (name == "gap") {
        spec.kind = ScoringKind::gap;
    } else if (name == "variance") {
        spec.kind = ScoringKind::variance;
    } else if (name == "total_entropy") {
        spec.kind = ScoringKind::total_entropy;
    } else if (name == "aleatoric_entropy") {
        spec.kind = ScoringKind::aleatoric_entropy;
    } else if (name == "mutual_information") {
        spec.kind = ScoringKind::mutual_information;
    } else if (name == "free_energy") {
        spec.kind = ScoringKind::free_energy;
    } else {
        throw InvalidParameterError("unknown scoring '" + name + "'");
    }
    spec.validate();
    return spec;
}

std::string ScoringSpec::name() const {
    switch (kind) {
    case ScoringKind::entropy: return "entropy";
    case ScoringKind::gap: return "gap";
    case ScoringKind::variance: return "variance";
    case ScoringKind::total_entropy: return "total_entropy";
    case ScoringKind::aleatoric_entropy: return "aleatoric_entropy";
    case ScoringKind::mutual_information: return "mutual_information";
    case ScoringKind::free_energy: return "free_energy";
    }
    return "entropy";
}

void ScoringSpec::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidParameterError("temperature must be positive");
    }
}

bool ScoringSpec::ensemble_flavored() const {
    return kind == ScoringKind::aleatoric_entropy || kind == ScoringKind::mutual_information ||
           kind == ScoringKind::total_entropy;
}

bool ScoringSpec::needs_logits() const { return kind == ScoringKind::free_energy; }

std::vector<std::string> scoring_names() {
    return {"entropy",           "gap",
            "variance",          "total_entropy",
            "aleatoric_entropy", "mutual_information",
            "free_energy"};
}

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

} // namespace

double entropy(const ProbVector& probs) { return -(plogp(probs.p0()) + plogp(probs.p1())); }

double total_entropy(const PredictionRecord& rec) { return entropy(rec.mean_prob()); }

double aleatoric_entropy(const PredictionRecord& rec) {
    double sum = 0.0;
    for (const ProbVector& m : rec.members()) sum += entropy(m);
    return sum / static_cast<double>(rec.members().size());
}

double mutual_information(const PredictionRecord& rec) {
    const double mi = total_entropy(rec) - aleatoric_entropy(rec);
    if (mi < 0.0) {
        if (mi < -1e-12) {
            throw InvalidParameterError("mutual information fell below the rounding slack");
        }
        return 0.0;
    }
    return mi;
}

double free_energy(const std::array<double, 2>& logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidParameterError("temperature must be positive");
    }
    // -T * logsumexp(c / T), stabilized around the larger logit.
    const double a = logits[0] / temperature;
    const double b = logits[1] / temperature;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return -temperature * (hi + std::log1p(std::exp(lo - hi)));
}

double variance_score(const PredictionRecord& rec) {
    const auto& members = rec.members();
    if (members.size() == 1) {
        const double p1 = members[0].p1();
        return p1 * (1.0 - p1);
    }
    const int label = rec.y_hat();
    double mean = 0.0;
    for (const ProbVector& m : members) mean += m[label];
    mean /= static_cast<double>(members.size());
    double acc = 0.0;
    for (const ProbVector& m : members) {
        const double d = m[label] - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(members.size());
}

double gap_score(const PredictionRecord& rec) { return 1.0 - rec.mean_prob()[rec.y_hat()]; }

double evaluate_scoring(const ScoringSpec& spec, const PredictionRecord& rec) {
    spec.validate();
    switch (spec.kind) {
    case ScoringKind::entropy:
    case ScoringKind::total_entropy:
        return total_entropy(rec);
    case ScoringKind::gap:
        return gap_score(rec);
    case ScoringKind::variance:
        return variance_score(rec);
    case ScoringKind::aleatoric_entropy:
        return aleatoric_entropy(rec);
    case ScoringKind::mutual_information:
        return mutual_information(rec);
    case ScoringKind::free_energy: {
        if (!rec.has_logits()) {
            throw InvalidParameterError("free_energy needs logits on every member");
        }
        // Ensemble free energy reads the averaged logits.
        double c0 = 0.0;
        double c1 = 0.0;
        for (const auto& l : rec.logits()) {
            c0 += l[0];
            c1 += l[1];
        }
        const double n = static_cast<double>(rec.logits().size());
        return free_energy({c0 / n, c1 / n}, spec.temperature);
    }
    }
    throw InvalidParameterError("unhandled scoring kind");
}

ScoreSeries score_records(const ScoringSpec& spec, const std::vector<PredictionRecord>& records) {
    ScoreSeries series;
    series.name = spec.name();
    series.values.reserve(records.size());
    for (const auto& rec : records) {
        series.values.emplace_back(rec.sample_id(), evaluate_scoring(spec, rec));
    }
    series.validate();
    return series;
}

} // namespace uqscore
