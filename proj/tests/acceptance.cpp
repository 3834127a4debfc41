// Acceptance suite: prints one line per criterion and exits with the number
// of hard failures. argv: <cli-binary> <scratch-dir>.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"
#include "uqscore/harness.hpp"
#include "uqscore/metrics.hpp"
#include "uqscore/mixture.hpp"
#include "uqscore/mlp.hpp"
#include "uqscore/risk.hpp"
#include "uqscore/rng.hpp"
#include "uqscore/scoring.hpp"

using namespace uqscore;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail, bool warn = false) {
    const char* tag = pass ? (warn ? "[WARN]" : "[PASS]") : "[FAIL]";
    std::printf("%s criterion %d: %s\n", tag, criterion, detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------- criterion 1

void criterion_lemma_identities() {
    Rng rng(derive_seed(2026, "c1"));
    double max_g_gap = 0.0;
    double max_h_gap = 0.0;
    for (int i = 0; i < 50; ++i) {
        const testsupport::MetricInstance inst = testsupport::draw_metric_instance(rng, 10000);
        const MetricReport rep =
            compute_metric_report(inst.scores, inst.mis, inst.deltas, inst.ids);
        max_g_gap = std::max(max_g_gap, std::fabs(rep.g_auc_direct - rep.g_auc_lemma));
        const double h_direct = h_auc_direct(inst.scores, inst.mis);
        max_h_gap = std::max(max_h_gap, std::fabs(h_direct - rep.h_auc_lemma));
    }
    const bool substitutions_ok = std::fabs(g_auc_from_lemma(1.0, 0.8) - 0.04) <= 1e-12 &&
                                  std::fabs(g_auc_from_lemma(0.5, 0.8) - 0.2) <= 1e-12 &&
                                  std::fabs(h_auc_from_lemma(1.0, 0.5) - 0.25) <= 1e-12;
    const bool pass = max_g_gap <= 0.05 && max_h_gap <= 0.02 && substitutions_ok;
    report(1, pass,
           "lemma identities: max |g direct - lemma| " + fmt(max_g_gap) +
               " (tol 0.05), max |h direct - lemma| " + fmt(max_h_gap) +
               " (tol 0.02), exact substitutions " + (substitutions_ok ? "ok" : "BROKEN"));
}

// ---------------------------------------------------------------- criterion 2

struct Candidate {
    std::string name;
    double value = 0.0;
};

std::vector<Candidate> ranking_candidates(const std::vector<double>& oracle,
                                          const std::string& label, Rng& rng,
                                          const std::function<double(const std::vector<double>&)>&
                                              metric) {
    std::vector<Candidate> out;
    out.push_back({label, metric(oracle)});
    for (double sigma : {0.05, 0.1, 0.2, 0.5}) {
        std::vector<double> noisy = oracle;
        for (double& v : noisy) v += sigma * rng.normal();
        out.push_back({label + "+noise(" + fmt(sigma) + ")", metric(noisy)});
    }
    std::vector<double> random(oracle.size());
    for (double& v : random) v = rng.uniform();
    out.push_back({"random", metric(random)});
    std::vector<double> negated = oracle;
    for (double& v : negated) v = -v;
    out.push_back({"negated", metric(negated)});
    return out;
}

// Oracle must sit on top (tolerance) and noise must degrade monotonically.
bool maximizer_holds(const std::vector<Candidate>& cands, std::string* why) {
    const double oracle = cands[0].value;
    for (std::size_t i = 1; i < cands.size(); ++i) {
        if (oracle < cands[i].value - 0.01) {
            *why = cands[i].name + " " + fmt(cands[i].value) + " beats oracle " + fmt(oracle);
            return false;
        }
    }
    for (std::size_t i = 1; i + 1 < 5; ++i) { // indices 1..4 are the noise levels
        if (cands[i].value < cands[i + 1].value - 0.01) {
            *why = cands[i].name + " " + fmt(cands[i].value) + " below " + cands[i + 1].name +
                   " " + fmt(cands[i + 1].value);
            return false;
        }
    }
    return true;
}

// Fixed well-separated two-component task: Bayes error ~0.1, so the oracle
// scores have both room to rank and enough misclassifications to rank over.
MixtureSpec default_task() {
    MixtureSpec spec;
    spec.mu0 = {0.0, 0.0};
    spec.mu1 = {2.5, 0.0};
    spec.sigma = 1.0;
    spec.p = 0.5;
    spec.tau = 1.0;
    return spec;
}

void criterion_maximizers() {
    const MixtureSpec spec = default_task();
    const std::vector<LabeledSample> samples =
        sample_points(spec, 4000, derive_seed(2026, "c2-data"), true);
    std::vector<PredictionRecord> preds;
    preds.reserve(samples.size());
    for (const auto& s : samples) {
        preds.push_back(testsupport::tempered_prediction(spec, s, 0.9, 0.1));
    }
    const std::vector<OracleAnnotation> anns = annotate(spec, samples, preds);

    std::vector<double> phi;
    std::vector<double> varphi;
    std::vector<double> deltas;
    std::vector<int> mis;
    for (const auto& a : anns) {
        phi.push_back(a.phi);
        varphi.push_back(a.varphi);
        deltas.push_back(a.delta);
        mis.push_back(a.mis);
    }

    Rng rng(derive_seed(2026, "c2-noise"));
    const std::vector<Candidate> auc_cands = ranking_candidates(
        phi, "phi", rng, [&](const std::vector<double>& s) { return uq_auc(s, mis); });
    const std::vector<Candidate> cidx_cands = ranking_candidates(
        varphi, "varphi", rng,
        [&](const std::vector<double>& s) { return uq_c_index(s, deltas); });

    std::string why;
    bool pass = maximizer_holds(auc_cands, &why);
    if (!pass) why = "uq_auc: " + why;
    std::string why2;
    const bool pass2 = maximizer_holds(cidx_cands, &why2);
    if (!pass2) why = why.empty() ? "uq_c_index: " + why2 : why + "; uq_c_index: " + why2;
    pass = pass && pass2;
    report(2, pass,
           pass ? "maximizer property: uq_auc(phi) " + fmt(auc_cands[0].value) +
                      " and uq_c_index(varphi) " + fmt(cidx_cands[0].value) +
                      " top their candidate sets with monotone noise degradation"
                : "maximizer property: " + why);
}

// ----------------------------------------------------------- criteria 3 and 4

void criterion_table_pattern(const std::vector<RunRecord>& records) {
    double r_auc_phi = 0.0;
    double r_auc_varphi = 0.0;
    double r_cidx_phi = 0.0;
    double r_cidx_varphi = 0.0;
    try {
        const auto j = nlohmann::json::parse(aggregate_table(records));
        r_auc_phi = j["uq_auc_vs_kendall_phi"]["pearson_r"].get<double>();
        r_auc_varphi = j["uq_auc_vs_kendall_varphi"]["pearson_r"].get<double>();
        r_cidx_phi = j["uq_c_index_vs_kendall_phi"]["pearson_r"].get<double>();
        r_cidx_varphi = j["uq_c_index_vs_kendall_varphi"]["pearson_r"].get<double>();
    } catch (const Error& e) {
        report(3, false, std::string("table pattern: ") + e.what());
        return;
    }
    const bool thresholds = r_cidx_varphi >= 0.90 && r_auc_phi >= 0.70;
    const bool row_dominance = r_auc_phi >= r_auc_varphi && r_cidx_varphi >= r_cidx_phi;
    report(3, thresholds && row_dominance,
           "table pattern on the desk grid: corr(uq_auc, k_phi) " + fmt(r_auc_phi) +
               " (>= 0.70), corr(uq_c_index, k_varphi) " + fmt(r_cidx_varphi) +
               " (>= 0.90), rows " + fmt(r_auc_phi) + " vs " + fmt(r_auc_varphi) + " and " +
               fmt(r_cidx_varphi) + " vs " + fmt(r_cidx_phi) +
               (row_dominance ? " dominate" : " DO NOT dominate"));
}

void criterion_negative_kendall(const std::vector<RunRecord>& records) {
    std::size_t negatives = 0;
    std::size_t below_half = 0;
    for (const auto& rec : records) {
        if (rec.status != "ok" || rec.kendall_phi >= 0.0) continue;
        ++negatives;
        below_half += static_cast<std::size_t>(rec.metrics.uq_auc < 0.5);
    }
    if (negatives == 0) {
        report(4, true,
               "negative-Kendall runs: none on the desk grid, claim vacuously holds "
               "(fraction not estimable)");
        return;
    }
    const double frac = static_cast<double>(below_half) / static_cast<double>(negatives);
    const std::string detail = "negative-Kendall runs: " + std::to_string(below_half) + "/" +
                               std::to_string(negatives) + " have uq_auc < 0.5 (fraction " +
                               fmt(frac) + ", want >= 0.7)";
    if (frac >= 0.7) {
        report(4, true, detail);
    } else if (frac >= 0.5) {
        report(4, true, detail + "; soft failure, warning only", true);
    } else {
        report(4, false, detail);
    }
}

// ---------------------------------------------------------------- criterion 5

// log P(X = k) for X ~ Binomial(n, p).
double binom_log_pmf(std::uint64_t k, std::uint64_t n, double p) {
    if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
    const double lchoose = std::lgamma(static_cast<double>(n) + 1.0) -
                           std::lgamma(static_cast<double>(k) + 1.0) -
                           std::lgamma(static_cast<double>(n - k) + 1.0);
    return lchoose + static_cast<double>(k) * std::log(p) +
           static_cast<double>(n - k) * std::log1p(-p);
}

double binom_cdf(std::uint64_t k, std::uint64_t n, double p) {
    double total = 0.0;
    for (std::uint64_t j = 0; j <= k; ++j) total += std::exp(binom_log_pmf(j, n, p));
    return std::min(total, 1.0);
}

void criterion_risk_control() {
    const MixtureSpec spec = default_task();
    const Dataset ds = split_dataset(
        sample_points(spec, 6000, derive_seed(2026, "c5-data"), true), 2000, true, 0.5);
    const SampleSet calib = ds.subset(Split::calibration);
    const SampleSet test = ds.subset(Split::test);

    auto annotate_split = [&](const SampleSet& split) {
        std::vector<PredictionRecord> preds;
        preds.reserve(split.samples.size());
        for (const auto& s : split.samples) {
            preds.push_back(testsupport::tempered_prediction(spec, s, 0.95, 0.05));
        }
        return annotate(spec, split.samples, preds);
    };
    const std::vector<OracleAnnotation> calib_ann = annotate_split(calib);
    const std::vector<OracleAnnotation> test_ann = annotate_split(test);

    std::vector<double> calib_phi;
    std::vector<int> calib_mis;
    for (const auto& a : calib_ann) {
        calib_phi.push_back(a.phi);
        calib_mis.push_back(a.mis);
    }
    const CalibratedGate gate =
        calibrate_gate(risk_curve(calib_phi, calib_mis, RiskKind::mce), 0.05);

    std::uint64_t covered = 0;
    std::uint64_t errors = 0;
    for (const auto& a : test_ann) {
        if (a.phi > gate.beta_hat) continue;
        ++covered;
        errors += static_cast<std::uint64_t>(a.mis);
    }
    const double rate = covered == 0 ? 0.0 : static_cast<double>(errors) / covered;
    // Central exact binomial test of the held-out error count against the
    // calibrated risk: inside the 95% interval means neither tail is < 2.5%.
    const double lower_tail = binom_cdf(errors, covered, gate.achieved_risk);
    const double upper_tail =
        1.0 - (errors == 0 ? 0.0 : binom_cdf(errors - 1, covered, gate.achieved_risk));
    const bool gate_ok = covered > 0 && lower_tail > 0.025 && upper_tail > 0.025;

    std::vector<double> test_varphi;
    std::vector<int> test_disagree;
    for (const auto& a : test_ann) {
        test_varphi.push_back(a.varphi);
        test_disagree.push_back(1 - a.bayes_agree);
    }
    const RiskCurve mbc = risk_curve(test_varphi, test_disagree, RiskKind::mbc);
    bool mbc_ok = true;
    for (const auto& pt : mbc.points) {
        if (pt.beta <= 0.5 && pt.risk != 0.0) {
            mbc_ok = false;
            break;
        }
    }

    report(5, gate_ok && mbc_ok,
           "risk control: held-out gated rate " + fmt(rate) + " (" + std::to_string(errors) +
               "/" + std::to_string(covered) + ") vs calibrated " + fmt(gate.achieved_risk) +
               ", binomial tails " + fmt(lower_tail) + "/" + fmt(upper_tail) +
               (gate_ok ? " inside" : " OUTSIDE") + " the 95% interval; mbc(varphi) " +
               (mbc_ok ? "is 0 for all beta <= 0.5" : "NONZERO below 0.5"));
}

// ---------------------------------------------------------------- criterion 6

// Tie-heavy random instance: scores and gaps may be snapped onto coarse
// grids, outcomes are Bernoulli with both classes forced.
struct TiedInstance {
    std::vector<double> scores;
    std::vector<int> mis;
    std::vector<double> deltas;
};

TiedInstance draw_tied_instance(Rng& rng) {
    for (;;) {
        const std::size_t n = 5 + static_cast<std::size_t>(rng.below(296));
        TiedInstance inst;
        const bool quantize_scores = rng.bernoulli(0.5);
        const bool quantize_deltas = rng.bernoulli(0.5);
        const double score_grid = 2.0 + static_cast<double>(rng.below(9));
        const double delta_grid = 2.0 + static_cast<double>(rng.below(9));
        const double err_rate = 0.15 + 0.35 * rng.uniform();
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = rng.uniform();
            if (quantize_scores) s = std::round(s * score_grid) / score_grid;
            double d = rng.uniform();
            if (quantize_deltas) d = std::round(d * delta_grid) / delta_grid;
            const int m = rng.bernoulli(err_rate) ? 1 : 0;
            wrong += static_cast<std::size_t>(m);
            inst.scores.push_back(s);
            inst.mis.push_back(m);
            inst.deltas.push_back(d);
        }
        if (wrong == 0 || wrong == n) continue;
        const auto constant = [](const std::vector<double>& v) {
            return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
        };
        if (constant(inst.scores) || constant(inst.deltas)) continue;
        return inst;
    }
}

void criterion_brute_force() {
    Rng rng(derive_seed(2026, "c6"));
    double worst = 0.0;
    bool pairs_ok = true;
    for (int i = 0; i < 200; ++i) {
        const TiedInstance inst = draw_tied_instance(rng);
        worst = std::max(worst, std::fabs(uq_auc(inst.scores, inst.mis) -
                                          testsupport::brute_uq_auc(inst.scores, inst.mis)));
        std::uint64_t fast_pairs = 0;
        std::uint64_t brute_pairs = 0;
        const double fast_c = uq_c_index(inst.scores, inst.deltas, &fast_pairs);
        const double brute_c =
            testsupport::brute_uq_c_index(inst.scores, inst.deltas, &brute_pairs);
        worst = std::max(worst, std::fabs(fast_c - brute_c));
        pairs_ok = pairs_ok && fast_pairs == brute_pairs;
        worst = std::max(worst, std::fabs(kendall_tau(inst.scores, inst.deltas) -
                                          testsupport::brute_kendall_tau(inst.scores,
                                                                         inst.deltas)));
    }
    report(6, worst <= 1e-12 && pairs_ok,
           "brute-force agreement on 200 tie-heavy instances: max deviation " + fmt(worst) +
               " (tol 1e-12), comparable-pair counts " + (pairs_ok ? "match" : "DIFFER"));
}

// ---------------------------------------------------------------- criterion 7

void criterion_rank_invariance() {
    Rng rng(derive_seed(2026, "c7"));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 30 + static_cast<std::size_t>(rng.below(171));
        std::vector<double> scores(n);
        std::vector<double> deltas(n);
        std::vector<int> mis(n);
        std::size_t wrong = 0;
        do {
            wrong = 0;
            for (std::size_t k = 0; k < n; ++k) {
                scores[k] = 4.0 * rng.uniform() - 2.0;
                deltas[k] = rng.uniform();
                mis[k] = rng.bernoulli(0.3) ? 1 : 0;
                wrong += static_cast<std::size_t>(mis[k]);
            }
        } while (wrong == 0 || wrong == n);

        const double a = 0.5 + 2.5 * rng.uniform();
        const double b = 2.0 * rng.uniform() - 1.0;
        const std::uint64_t pick = rng.below(4);
        std::vector<double> transformed(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = scores[k];
            switch (pick) {
            case 0: transformed[k] = a * x + b; break;
            case 1: transformed[k] = std::exp(x / 2.0); break;
            case 2: transformed[k] = x * x * x + x; break;
            default: transformed[k] = std::atan(x) + 0.1 * x; break;
            }
        }
        worst = std::max(worst, std::fabs(uq_auc(scores, mis) - uq_auc(transformed, mis)));
        worst = std::max(worst,
                         std::fabs(uq_c_index(scores, deltas) - uq_c_index(transformed, deltas)));
    }
    report(7, worst <= 1e-12,
           "rank invariance over 1000 strictly increasing transforms: max change " + fmt(worst) +
               " (tol 1e-12)");
}

// ---------------------------------------------------------------- criterion 8

void criterion_numerical_kernels() {
    // Gradient check on every hidden layout of the grid, with and without
    // dropout.
    const MixtureSpec spec = sample_spec(derive_seed(2026, "c8-spec"), 1.0);
    const std::vector<LabeledSample> batch =
        sample_points(spec, 8, derive_seed(2026, "c8-batch"), true);
    double worst_grad = 0.0;
    for (const auto& layout : GridConfig::full_grid().hidden_layouts) {
        for (double rate : {0.0, 0.5}) {
            MlpConfig config;
            config.hidden_sizes = layout;
            config.dropout_rate = rate;
            const MlpModel model = init_model(config, derive_seed(2026, "c8-init"));
            worst_grad = std::max(worst_grad, grad_check(model, batch));
        }
    }

    Rng rng(derive_seed(2026, "c8-mi"));
    double min_mi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const std::size_t members = 2 + static_cast<std::size_t>(rng.below(4));
        std::vector<ProbVector> probs;
        probs.reserve(members);
        for (std::size_t u = 0; u < members; ++u) {
            const double q = rng.uniform();
            probs.push_back(ProbVector::checked(1.0 - q, q));
        }
        const PredictionRecord rec =
            PredictionRecord::from_members("m" + std::to_string(i), std::move(probs));
        min_mi = std::min(min_mi, total_entropy(rec) - aleatoric_entropy(rec));
    }

    double worst_norm = 0.0;
    MixtureSpec norm_spec;
    for (int i = 0; i < 100000; ++i) {
        if (i % 1000 == 0) {
            norm_spec = sample_spec(rng.next_u64(), 0.5 + 2.0 * rng.uniform(),
                                    0.4 + rng.uniform());
        }
        const std::array<double, 2> x{3.0 * rng.normal(), 3.0 * rng.normal()};
        const ProbVector post = posterior(norm_spec, x);
        worst_norm = std::max(worst_norm, std::fabs(post.p0() + post.p1() - 1.0));
    }

    const bool pass = worst_grad < 1e-4 && min_mi >= -1e-12 && worst_norm <= 1e-12;
    report(8, pass,
           "numerical kernels: max gradient-check error " + fmt(worst_grad) +
               " (tol 1e-4), min pre-clamp mutual information " + fmt(min_mi) +
               " (floor -1e-12), max posterior normalization error " + fmt(worst_norm) +
               " (tol 1e-12)");
}

// ---------------------------------------------------------------- criterion 9

void criterion_determinism(const std::filesystem::path& w1, const std::filesystem::path& w8) {
    const std::string a = slurp(w1);
    const std::string b = slurp(w8);
    const bool pass = !a.empty() && a == b;
    report(9, pass,
           pass ? "determinism: desk grid with 1 and 8 workers is byte-identical (" +
                      std::to_string(a.size()) + " bytes)"
                : "determinism: worker counts disagree or output missing");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <cli-binary> <scratch-dir>\n");
        return 2;
    }
    const std::string cli = argv[argc - 2];
    const std::filesystem::path scratch = argv[argc - 1];
    std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(scratch);

    // The desk grid feeds criteria 3, 4 and 9; run it through the real CLI
    // once per worker count up front.
    const std::filesystem::path desk_w1 = scratch / "desk_w1.ndjson";
    const std::filesystem::path desk_w8 = scratch / "desk_w8.ndjson";
    const std::filesystem::path desk_log = scratch / "desk.log";
    for (const auto& [workers, path] : {std::pair<int, std::filesystem::path>{1, desk_w1},
                                        {8, desk_w8}}) {
        const std::string cmd = cli + " experiment --preset desk --workers " +
                                std::to_string(workers) + " --out " + path.string() + " 2>> " +
                                desk_log.string();
        if (run_command(cmd) != 0) {
            std::fprintf(stderr, "desk grid run failed: %s\n", cmd.c_str());
            return 2;
        }
    }
    std::vector<RunRecord> desk_records;
    {
        std::ifstream in(desk_w1);
        desk_records = read_run_records(in);
    }
    std::printf("[info] desk grid: %zu runs recorded\n", desk_records.size());

    criterion_lemma_identities();
    criterion_maximizers();
    criterion_table_pattern(desk_records);
    criterion_negative_kendall(desk_records);
    criterion_risk_control();
    criterion_brute_force();
    criterion_rank_invariance();
    criterion_numerical_kernels();
    criterion_determinism(desk_w1, desk_w8);

    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures;
}
