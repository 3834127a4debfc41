#include "uqscore/risk.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "uqscore/errors.hpp"
#include "uqscore/text.hpp"

namespace uqscore {

const char* risk_kind_name(RiskKind kind) { return kind == RiskKind::mce ? "mce" : "mbc"; }

RiskKind parse_risk_kind(const std::string& name) {
    if (name == "mce") return RiskKind::mce;
    if (name == "mbc") return RiskKind::mbc;
    throw InvalidParameterError("unknown risk curve kind '" + name + "'");
}

RiskCurve risk_curve(std::span<const double> scores, std::span<const int> indicators,
                     RiskKind kind) {
    if (scores.empty()) {
        throw InvalidParameterError("scores must be non-empty");
    }
    if (scores.size() != indicators.size()) {
        throw InvalidParameterError("scores and indicators must be aligned");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw InvalidParameterError("scores must be finite");
        }
        if (indicators[i] != 0 && indicators[i] != 1) {
            throw InvalidParameterError("indicators must be 0 or 1");
        }
    }

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    RiskCurve curve;
    curve.kind = kind;
    curve.n_total = n;
    std::uint64_t covered = 0;
    std::uint64_t hits = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            ++covered;
            hits += static_cast<std::uint64_t>(indicators[order[k]]);
        }
        RiskCurvePoint pt;
        pt.beta = scores[order[i]];
        pt.n_covered = covered;
        pt.coverage = static_cast<double>(covered) / static_cast<double>(n);
        pt.risk = static_cast<double>(hits) / static_cast<double>(covered);
        curve.points.push_back(pt);
        i = j + 1;
    }
    return curve;
}

std::string CalibratedGate::to_json() const {
    nlohmann::ordered_json j;
    j["gamma_target"] = gamma_target;
    j["beta_hat"] = beta_hat;
    j["achieved_risk"] = achieved_risk;
    j["coverage"] = coverage;
    j["expected_set_size"] = expected_set_size;
    return j.dump();
}

CalibratedGate CalibratedGate::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("gate JSON: ") + e.what());
    }
    CalibratedGate g;
    try {
        j.at("gamma_target").get_to(g.gamma_target);
        j.at("beta_hat").get_to(g.beta_hat);
        j.at("achieved_risk").get_to(g.achieved_risk);
        j.at("coverage").get_to(g.coverage);
        j.at("expected_set_size").get_to(g.expected_set_size);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("gate JSON: ") + e.what());
    }
    return g;
}

CalibratedGate calibrate_gate(const RiskCurve& curve, double gamma) {
    if (curve.points.empty()) {
        throw InvalidParameterError("risk curve has no points");
    }
    // gamma = 0 is allowed: it asks for a zero-error region, which the
    // empirical inversion below handles like any other budget.
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidParameterError("gamma must be non-negative");
    }
    const RiskCurvePoint* best = nullptr;
    for (const auto& pt : curve.points) {
        if (pt.risk <= gamma) best = &pt;
    }
    if (best == nullptr) {
        throw InfeasibleBudgetError("no threshold reaches conditional risk <= " + fmt_g17(gamma));
    }
    CalibratedGate gate;
    gate.gamma_target = gamma;
    gate.beta_hat = best->beta;
    gate.achieved_risk = best->risk;
    gate.coverage = best->coverage;
    gate.expected_set_size = gate.coverage + 2.0 * (1.0 - gate.coverage);
    return gate;
}

std::vector<DominanceRow> dominance_profile(std::span<const double> scores1,
                                            std::span<const double> scores2,
                                            std::span<const int> indicators,
                                            std::span<const int> correct_mask,
                                            std::span<const double> gamma_grid) {
    const std::size_t n = indicators.size();
    if (scores1.size() != n || scores2.size() != n || correct_mask.size() != n) {
        throw InvalidParameterError("score columns and masks must be aligned");
    }
    if (gamma_grid.empty()) {
        throw InvalidParameterError("gamma grid must be non-empty");
    }
    std::uint64_t n_correct = 0;
    for (int c : correct_mask) {
        if (c != 0 && c != 1) {
            throw InvalidParameterError("correct mask entries must be 0 or 1");
        }
        n_correct += static_cast<std::uint64_t>(c);
    }
    if (n_correct == 0) {
        throw DegenerateDataError("no correctly handled samples to condition on");
    }

    const RiskCurve curve1 = risk_curve(scores1, indicators, RiskKind::mce);
    const RiskCurve curve2 = risk_curve(scores2, indicators, RiskKind::mce);

    auto conditional_coverage = [&](std::span<const double> scores, double beta) {
        std::uint64_t kept = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (correct_mask[i] == 1 && scores[i] <= beta) ++kept;
        }
        return static_cast<double>(kept) / static_cast<double>(n_correct);
    };

    std::vector<DominanceRow> rows;
    rows.reserve(gamma_grid.size());
    for (double gamma : gamma_grid) {
        DominanceRow row;
        row.gamma = gamma;
        try {
            const CalibratedGate g1 = calibrate_gate(curve1, gamma);
            row.feasible1 = true;
            row.beta1 = g1.beta_hat;
            row.coverage1 = conditional_coverage(scores1, g1.beta_hat);
        } catch (const InfeasibleBudgetError&) {
        }
        try {
            const CalibratedGate g2 = calibrate_gate(curve2, gamma);
            row.feasible2 = true;
            row.beta2 = g2.beta_hat;
            row.coverage2 = conditional_coverage(scores2, g2.beta_hat);
        } catch (const InfeasibleBudgetError&) {
        }
        if (row.feasible1) {
            row.se1 = std::sqrt(row.coverage1 * (1.0 - row.coverage1) /
                                static_cast<double>(n_correct));
        }
        if (row.feasible2) {
            row.se2 = std::sqrt(row.coverage2 * (1.0 - row.coverage2) /
                                static_cast<double>(n_correct));
        }
        if (row.feasible1 && row.feasible2) {
            row.gap = row.coverage1 - row.coverage2;
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> default_gamma_grid() {
    std::vector<double> grid;
    grid.reserve(19);
    for (int k = 0; k < 19; ++k) grid.push_back(0.01 + 0.005 * static_cast<double>(k));
    return grid;
}

void write_risk_curve_csv(const RiskCurve& curve, std::ostream& out) {
    out << "beta,risk,coverage,n_covered\n";
    for (const auto& pt : curve.points) {
        out << fmt_g17(pt.beta) << ',' << fmt_g17(pt.risk) << ',' << fmt_g17(pt.coverage) << ','
            << pt.n_covered << '\n';
    }
}

RiskCurve read_risk_curve_csv(std::istream& in, RiskKind kind) {
    RiskCurve curve;
    curve.kind = kind;
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaViolationError("risk curve CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "beta,risk,coverage,n_covered") {
        throw SchemaViolationError("line 1: expected header beta,risk,coverage,n_covered");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": expected 4 fields");
        }
        RiskCurvePoint pt;
        try {
            pt.beta = std::stod(fields[0]);
            pt.risk = std::stod(fields[1]);
            pt.coverage = std::stod(fields[2]);
            pt.n_covered = std::stoull(fields[3]);
        } catch (const std::exception&) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": bad numeric field");
        }
        curve.points.push_back(pt);
    }
    if (curve.points.empty()) {
        throw SchemaViolationError("risk curve CSV has no points");
    }
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        if (!(curve.points[i].beta < curve.points[i + 1].beta)) {
            throw SchemaViolationError("risk curve thresholds must increase");
        }
    }
    curve.n_total = curve.points.back().n_covered;
    return curve;
}

} // namespace uqscore
