#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace uqscore {

// Which indicator the curve conditions on: misclassification (mce) or
// disagreement with the Bayes decision (mbc).
enum class RiskKind { mce, mbc };

const char* risk_kind_name(RiskKind kind);
RiskKind parse_risk_kind(const std::string& name);

struct RiskCurvePoint {
    double beta = 0.0;      // score threshold
    double risk = 0.0;      // mean indicator over {score <= beta}
    double coverage = 0.0;  // |{score <= beta}| / n
    std::uint64_t n_covered = 0;
};

struct RiskCurve {
    RiskKind kind = RiskKind::mce;
    std::uint64_t n_total = 0;
    std::vector<RiskCurvePoint> points; // one per distinct observed score, ascending
};

// Empirical conditional risk over score sub-level sets.
RiskCurve risk_curve(std::span<const double> scores, std::span<const int> indicators,
                     RiskKind kind);

struct CalibratedGate {
    double gamma_target = 0.0;
    double beta_hat = 0.0;
    double achieved_risk = 0.0;
    double coverage = 0.0;
    double expected_set_size = 0.0; // coverage * 1 + (1 - coverage) * 2

    std::string to_json() const;
    static CalibratedGate from_json(const std::string& text);
};

// Largest observed threshold whose empirical risk stays within gamma.
// Throws infeasible-budget when no threshold qualifies.
CalibratedGate calibrate_gate(const RiskCurve& curve, double gamma);

// One row of a matched-risk comparison between two scorings at a shared
// budget. Coverage is conditional on the correct samples; se_* are its
// binomial standard errors.
struct DominanceRow {
    double gamma = 0.0;
    bool feasible1 = false;
    bool feasible2 = false;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double coverage1 = 0.0;
    double coverage2 = 0.0;
    double gap = 0.0; // coverage1 - coverage2
    double se1 = 0.0;
    double se2 = 0.0;
};

std::vector<DominanceRow> dominance_profile(std::span<const double> scores1,
                                            std::span<const double> scores2,
                                            std::span<const int> indicators,
                                            std::span<const int> correct_mask,
                                            std::span<const double> gamma_grid);

// 19 budgets: 0.01, 0.015, ..., 0.10.
std::vector<double> default_gamma_grid();

// CSV round trip, header `beta,risk,coverage,n_covered`.
void write_risk_curve_csv(const RiskCurve& curve, std::ostream& out);
RiskCurve read_risk_curve_csv(std::istream& in, RiskKind kind = RiskKind::mce);

} // namespace uqscore
