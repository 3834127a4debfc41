#include "uqscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "uqscore/errors.hpp"

namespace uqscore {

namespace {

void check_scores(std::span<const double> scores) {
    if (scores.empty()) {
        throw InvalidParameterError("scores must be non-empty");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw InvalidParameterError("scores must be finite");
        }
    }
}

void check_mis(std::span<const int> mis) {
    for (int v : mis) {
        if (v != 0 && v != 1) {
            throw InvalidParameterError("mis indicators must be 0 or 1");
        }
    }
}

// 1-based midranks; tied values share the average of their rank block.
std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

// Fenwick tree over compressed ranks, counting inserted items.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

    void add(std::size_t pos) { // 1-based
        for (; pos < tree_.size(); pos += pos & (~pos + 1)) ++tree_[pos];
    }

    std::uint64_t prefix(std::size_t pos) const { // count of items at rank <= pos
        std::uint64_t sum = 0;
        for (; pos > 0; pos -= pos & (~pos + 1)) sum += tree_[pos];
        return sum;
    }

private:
    std::vector<std::uint64_t> tree_;
};

// Pairs (i < j) with seq[i] > seq[j], counted during a merge sort. Equal
// elements are not inversions.
std::uint64_t count_inversions(std::vector<double>& seq) {
    const std::size_t n = seq.size();
    std::vector<double> buf(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo;
            std::size_t b = mid;
            std::size_t out = lo;
            while (a < mid && b < hi) {
                if (seq[a] <= seq[b]) {
                    buf[out++] = seq[a++];
                } else {
                    inversions += mid - a;
                    buf[out++] = seq[b++];
                }
            }
            while (a < mid) buf[out++] = seq[a++];
            while (b < hi) buf[out++] = seq[b++];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                      buf.begin() + static_cast<std::ptrdiff_t>(hi),
                      seq.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
        const std::uint64_t t = j - i + 1;
        pairs += t * (t - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

} // namespace

double uq_auc(std::span<const double> scores, std::span<const int> mis) {
    check_scores(scores);
    check_mis(mis);
    if (scores.size() != mis.size()) {
        throw InvalidParameterError("scores and mis must be aligned");
    }
    std::uint64_t n1 = 0;
    for (int v : mis) n1 += static_cast<std::uint64_t>(v);
    const std::uint64_t n0 = scores.size() - n1;
    if (n0 == 0 || n1 == 0) {
        throw MetricUndefinedError("uq_auc");
    }
    const std::vector<double> ranks = midranks(scores);
    double rank_sum_mis = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (mis[i] == 1) rank_sum_mis += ranks[i];
    }
    const double u = rank_sum_mis -
                     0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

double uq_c_index(std::span<const double> scores, std::span<const double> deltas,
                  std::uint64_t* comparable_pairs) {
    check_scores(scores);
    if (scores.size() != deltas.size()) {
        throw InvalidParameterError("scores and deltas must be aligned");
    }
    for (double d : deltas) {
        if (!std::isfinite(d)) {
            throw InvalidParameterError("deltas must be finite");
        }
    }
    const std::size_t n = scores.size();

    // Compress the score values to Fenwick positions.
    std::vector<double> sorted_scores(scores.begin(), scores.end());
    std::sort(sorted_scores.begin(), sorted_scores.end());
    sorted_scores.erase(std::unique(sorted_scores.begin(), sorted_scores.end()),
                        sorted_scores.end());
    auto score_rank = [&](double s) {
        return static_cast<std::size_t>(std::lower_bound(sorted_scores.begin(),
                                                         sorted_scores.end(), s) -
                                        sorted_scores.begin()) +
               1;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return deltas[a] < deltas[b]; });

    Fenwick seen(sorted_scores.size());
    double numerator = 0.0;
    std::uint64_t comparable = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && deltas[order[j + 1]] == deltas[order[i]]) ++j;
        const std::uint64_t block = j - i + 1;
        comparable -= block * (block - 1) / 2;
        // Everything inserted so far has a strictly smaller delta.
        for (std::size_t k = i; k <= j; ++k) {
            const std::size_t r = score_rank(scores[order[k]]);
            const std::uint64_t below = seen.prefix(r - 1);
            const std::uint64_t at = seen.prefix(r) - below;
            numerator += static_cast<double>(below) + 0.5 * static_cast<double>(at);
        }
        for (std::size_t k = i; k <= j; ++k) seen.add(score_rank(scores[order[k]]));
        i = j + 1;
    }

    if (comparable == 0) {
        throw MetricUndefinedError("uq_c_index");
    }
    if (comparable_pairs != nullptr) *comparable_pairs = comparable;
    return numerator / static_cast<double>(comparable);
}

double g_auc_direct(std::span<const double> scores, std::span<const int> mis,
                    std::span<const std::string> ids) {
    check_scores(scores);
    check_mis(mis);
    if (scores.size() != mis.size()) {
        throw InvalidParameterError("scores and mis must be aligned");
    }
    if (!ids.empty() && ids.size() != scores.size()) {
        throw InvalidParameterError("ids, when given, must be aligned with scores");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (ids.empty()) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    } else {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] < scores[b];
            return ids[a] < ids[b];
        });
    }
    double sum = 0.0;
    std::uint64_t errors = 0;
    for (std::size_t k = 0; k < n; ++k) {
        errors += static_cast<std::uint64_t>(mis[order[k]]);
        sum += static_cast<double>(errors) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(n);
}

double h_auc_direct(std::span<const double> scores, std::span<const int> mis) {
    check_scores(scores);
    check_mis(mis);
    if (scores.size() != mis.size()) {
        throw InvalidParameterError("scores and mis must be aligned");
    }
    const std::size_t n = scores.size();
    std::vector<double> correct_scores;
    correct_scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (mis[i] == 0) correct_scores.push_back(scores[i]);
    }
    if (correct_scores.empty() || correct_scores.size() == n) {
        throw MetricUndefinedError("h_auc");
    }
    std::sort(correct_scores.begin(), correct_scores.end());
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mis[i] != 1) continue;
        const auto lo = std::lower_bound(correct_scores.begin(), correct_scores.end(), scores[i]);
        const auto hi = std::upper_bound(lo, correct_scores.end(), scores[i]);
        mass += static_cast<double>(lo - correct_scores.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return mass / (static_cast<double>(n) * static_cast<double>(n));
}

double g_auc_from_lemma(double uq_auc_value, double acc) {
    const double err = 1.0 - acc;
    return err * err + 2.0 * (1.0 - uq_auc_value) * err * acc;
}

double h_auc_from_lemma(double uq_auc_value, double acc) {
    return uq_auc_value * (1.0 - acc) * acc;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidParameterError("series must be aligned");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw MetricUndefinedError("kendall_tau");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
            throw InvalidParameterError("series must be finite");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::uint64_t ties_a = 0;
    std::uint64_t ties_joint = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && a[order[j + 1]] == a[order[i]]) ++j;
        const std::uint64_t t = j - i + 1;
        ties_a += t * (t - 1) / 2;
        std::size_t k = i;
        while (k <= j) {
            std::size_t m = k;
            while (m + 1 <= j && b[order[m + 1]] == b[order[k]]) ++m;
            const std::uint64_t u = m - k + 1;
            ties_joint += u * (u - 1) / 2;
            k = m + 1;
        }
        i = j + 1;
    }
    const std::uint64_t ties_b = tie_pair_count(std::vector<double>(b.begin(), b.end()));

    std::vector<double> b_in_a_order(n);
    for (std::size_t k = 0; k < n; ++k) b_in_a_order[k] = b[order[k]];
    const std::uint64_t discordant = count_inversions(b_in_a_order);

    const std::uint64_t mixed = n0 - ties_a - ties_b + ties_joint;
    const double concordant = static_cast<double>(mixed) - static_cast<double>(discordant);
    const double denom = std::sqrt(static_cast<double>(n0 - ties_a)) *
                         std::sqrt(static_cast<double>(n0 - ties_b));
    if (denom == 0.0) {
        throw MetricUndefinedError("kendall_tau");
    }
    return (concordant - static_cast<double>(discordant)) / denom;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidParameterError("quantile level must lie in (0,1)");
    }
    // Acklam's rational approximation, then one Halley step against erfc.
    static const double A[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double B[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double C[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double D[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
            (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

CorrelationReport pearson_fisher(std::span<const double> a, std::span<const double> b,
                                 double alpha) {
    if (a.size() != b.size()) {
        throw InvalidParameterError("series must be aligned");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidParameterError("alpha must lie in (0,1)");
    }
    const std::size_t n = a.size();
    if (n < 4) {
        throw MetricUndefinedError("pearson_fisher");
    }
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
            throw InvalidParameterError("series must be finite");
        }
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw MetricUndefinedError("pearson_fisher");
    }
    double r = sab / std::sqrt(saa * sbb);
    r = std::clamp(r, -1.0, 1.0);

    CorrelationReport report;
    report.kendall_tau = kendall_tau(a, b);
    report.pearson_r = r;
    report.alpha = alpha;
    if (std::fabs(r) >= 1.0 - 1e-12) {
        report.pearson_ci_low = r;
        report.pearson_ci_high = r;
        return report;
    }
    const double z = std::atanh(r);
    const double half_width =
        normal_quantile(1.0 - (1.0 - alpha) / 2.0) / std::sqrt(static_cast<double>(n - 3));
    report.pearson_ci_low = std::tanh(z - half_width);
    report.pearson_ci_high = std::tanh(z + half_width);
    return report;
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["uq_auc"] = uq_auc;
    j["uq_c_index"] = uq_c_index;
    j["g_auc_direct"] = g_auc_direct;
    j["g_auc_lemma"] = g_auc_lemma;
    j["h_auc_lemma"] = h_auc_lemma;
    j["acc"] = acc;
    j["n"] = n;
    j["comparable_pairs"] = comparable_pairs;
    j["provenance"] = provenance;
    return j.dump();
}

MetricReport MetricReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("metric report JSON: ") + e.what());
    }
    MetricReport r;
    try {
        j.at("uq_auc").get_to(r.uq_auc);
        j.at("uq_c_index").get_to(r.uq_c_index);
        j.at("g_auc_direct").get_to(r.g_auc_direct);
        j.at("g_auc_lemma").get_to(r.g_auc_lemma);
        j.at("h_auc_lemma").get_to(r.h_auc_lemma);
        j.at("acc").get_to(r.acc);
        j.at("n").get_to(r.n);
        j.at("comparable_pairs").get_to(r.comparable_pairs);
        j.at("provenance").get_to(r.provenance);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("metric report JSON: ") + e.what());
    }
    return r;
}

MetricReport compute_metric_report(std::span<const double> scores, std::span<const int> mis,
                                   std::span<const double> deltas,
                                   std::span<const std::string> ids, std::string provenance) {
    if (scores.size() != mis.size() || scores.size() != deltas.size()) {
        throw InvalidParameterError("scores, mis and deltas must be aligned");
    }
    MetricReport report;
    report.n = scores.size();
    std::uint64_t wrong = 0;
    for (int v : mis) wrong += static_cast<std::uint64_t>(v);
    report.acc = 1.0 - static_cast<double>(wrong) / static_cast<double>(scores.size());
    report.uq_auc = uq_auc(scores, mis);
    report.uq_c_index = uq_c_index(scores, deltas, &report.comparable_pairs);
    report.g_auc_direct = g_auc_direct(scores, mis, ids);
    report.g_auc_lemma = g_auc_from_lemma(report.uq_auc, report.acc);
    report.h_auc_lemma = h_auc_from_lemma(report.uq_auc, report.acc);
    report.provenance = std::move(provenance);
    return report;
}

double uq_auc(const ScoreSeries& series, std::span<const int> mis) {
    series.validate();
    const std::vector<double> scores = series.scores();
    return uq_auc(std::span<const double>(scores), mis);
}

double uq_c_index(const ScoreSeries& series, std::span<const double> deltas,
                  std::uint64_t* comparable_pairs) {
    series.validate();
    const std::vector<double> scores = series.scores();
    return uq_c_index(std::span<const double>(scores), deltas, comparable_pairs);
}

} // namespace uqscore
