// Command line front end: dataset generation, training, scoring, metric
// reports, risk curves, gate calibration, grid experiments and report
// aggregation. Data goes to stdout or the requested files; logs go to
// stderr. Exit codes: 0 success, 1 usage error, 2 data or metric error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uqscore/harness.hpp"
#include "uqscore/metrics.hpp"
#include "uqscore/mixture.hpp"
#include "uqscore/mlp.hpp"
#include "uqscore/risk.hpp"
#include "uqscore/rng.hpp"
#include "uqscore/scoring.hpp"
#include "uqscore/text.hpp"

namespace {

using namespace uqscore;

constexpr std::uint64_t kDefaultSeed = 7;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed.has_value()) return *flag_seed;
    if (const char* env = std::getenv("UQSCORE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw InvalidParameterError("UQSCORE_SEED must be an unsigned integer");
        }
    }
    return kDefaultSeed;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

// Writes to the path, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
    } else {
        write_file(path, content);
    }
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, ',')) {
        try {
            sizes.push_back(std::stoul(cur));
        } catch (const std::exception&) {
            throw InvalidParameterError("bad hidden layout '" + text + "'");
        }
    }
    if (sizes.empty()) {
        throw InvalidParameterError("hidden layout must name at least one layer");
    }
    return sizes;
}

struct GenerateArgs {
    std::optional<std::uint64_t> seed;
    std::size_t n = 1000;
    double tau = 1.0;
    double sigma = 1.0;
    double p = 0.5;
    std::size_t train_n = 600;
    bool no_stratify = false;
    double calib_fraction = 0.0;
    std::string out;
    std::string spec_out;
};

int cmd_generate(const GenerateArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    const MixtureSpec spec =
        sample_spec(derive_seed(seed, "mixture-spec"), args.tau, args.sigma, args.p);
    Dataset ds = split_dataset(
        sample_points(spec, args.n, derive_seed(seed, "dataset"), !args.no_stratify),
        args.train_n, !args.no_stratify, args.calib_fraction);
    std::ostringstream csv;
    write_dataset_csv(ds, csv);
    emit(args.out, csv.str());
    if (!args.spec_out.empty()) {
        write_file(args.spec_out, mixture_spec_to_json(spec) + "\n");
    }
    std::cerr << "generated " << ds.samples.size() << " samples (train " << ds.count(Split::train)
              << ", test " << ds.count(Split::test) << ", calibration "
              << ds.count(Split::calibration) << ")\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string split = "train";
    std::string hidden = "64,32";
    double dropout = 0.0;
    double lr = 0.025;
    std::size_t epochs = 50;
    std::size_t batch = 504;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_train(const TrainArgs& args) {
    std::istringstream data_in(read_file(args.data));
    const Dataset ds = read_dataset_csv(data_in);
    const SampleSet split = ds.subset(parse_split(args.split));
    if (split.samples.empty()) {
        throw DegenerateDataError("split '" + args.split + "' is empty");
    }

    MlpConfig config;
    config.hidden_sizes = parse_hidden(args.hidden);
    config.dropout_rate = args.dropout;

    TrainConfig train_config;
    train_config.epochs = args.epochs;
    train_config.batch_size = args.batch;
    train_config.learning_rate = args.lr;
    train_config.seed = resolve_seed(args.seed);

    const MlpModel model = train(split, config, train_config);
    emit(args.out, model_to_json(model) + "\n");
    std::cerr << "trained on " << split.samples.size() << " samples, final epoch loss "
              << fmt_g17(model.epoch_loss.back()) << "\n";
    return 0;
}

struct ScoreArgs {
    std::string data;
    std::string split = "test";
    std::vector<std::string> models;
    std::string backbone = "softmax";
    std::size_t n_mc = 50;
    std::string scoring = "entropy";
    double temperature = 1.0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_score(const ScoreArgs& args) {
    std::istringstream data_in(read_file(args.data));
    const Dataset ds = read_dataset_csv(data_in);
    const SampleSet split = ds.subset(parse_split(args.split));
    if (split.samples.empty()) {
        throw DegenerateDataError("split '" + args.split + "' is empty");
    }

    UqBackbone backbone;
    backbone.kind = parse_backbone(args.backbone);
    backbone.n_mc = args.n_mc;
    backbone.inference_seed = derive_seed(resolve_seed(args.seed), "inference");
    for (const auto& path : args.models) {
        backbone.models.push_back(model_from_json(read_file(path)));
    }
    if (backbone.kind == BackboneKind::mc_dropout && !backbone.models.empty() &&
        backbone.models[0].config.dropout_rate <= 0.0) {
        throw InvalidParameterError("mc_dropout needs a model trained with dropout");
    }
    backbone.validate();

    const std::vector<PredictionRecord> records = predict_all(backbone, split.samples);
    const ScoringSpec spec = ScoringSpec::parse(args.scoring, args.temperature);
    const ScoreSeries series = score_records(spec, records);
    std::vector<int> labels;
    labels.reserve(split.samples.size());
    for (const auto& s : split.samples) labels.push_back(s.y);

    std::ostringstream out;
    write_predictions_ndjson(records, labels, out, &series);
    emit(args.out, out.str());
    std::cerr << "scored " << records.size() << " samples with " << series.name << "\n";
    return 0;
}

struct OracleColumns {
    std::vector<double> phi;
    std::vector<double> varphi;
};

// Joins an ingested prediction set against the dataset and mixture spec to
// recover the oracle reference values.
OracleColumns oracle_columns(const MixtureSpec& spec, const Dataset& ds,
                             const IngestResult& ingest) {
    std::vector<OracleAnnotation> annotations = annotate(spec, ds.samples, ingest.records);
    OracleColumns cols;
    cols.phi.reserve(annotations.size());
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        cols.phi.push_back(annotations[i].phi);
        cols.varphi.push_back(annotations[i].varphi);
    }
    return cols;
}

struct MetricsArgs {
    std::string predictions;
    std::string scoring;
    double temperature = 1.0;
    std::string spec;
    std::string data;
    double alpha = 0.95;
    std::string out;
};

ScoreSeries resolve_scores(const IngestResult& ingest, const std::string& scoring,
                           double temperature) {
    if (!scoring.empty()) {
        return score_records(ScoringSpec::parse(scoring, temperature), ingest.records);
    }
    if (ingest.scores.has_value()) {
        return *ingest.scores;
    }
    throw InvalidParameterError("no score column: pass --scoring or embed scores");
}

int cmd_metrics(const MetricsArgs& args) {
    std::istringstream pred_in(read_file(args.predictions));
    const IngestResult ingest = ingest_predictions(pred_in);
    const ScoreSeries series = resolve_scores(ingest, args.scoring, args.temperature);
    const std::vector<double> scores = series.scores();

    std::vector<int> mis;
    std::vector<double> deltas;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < ingest.records.size(); ++i) {
        mis.push_back(mis_indicator(ingest.labels[i], ingest.records[i].y_hat()));
        deltas.push_back(gap_delta(ingest.records[i].mean_prob(), ingest.labels[i]));
        ids.push_back(ingest.records[i].sample_id());
    }

    const MetricReport report = compute_metric_report(scores, mis, deltas, ids,
                                                      "predictions=" + args.predictions +
                                                          ";scoring=" + series.name);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(report.to_json());
    if (!args.spec.empty() || !args.data.empty()) {
        if (args.spec.empty() || args.data.empty()) {
            throw InvalidParameterError("--spec and --data must be given together");
        }
        const MixtureSpec spec = mixture_spec_from_json(read_file(args.spec));
        std::istringstream data_in(read_file(args.data));
        const Dataset ds = read_dataset_csv(data_in);
        const OracleColumns cols = oracle_columns(spec, ds, ingest);
        j["kendall_phi"] = kendall_tau(scores, cols.phi);
        j["kendall_varphi"] = kendall_tau(scores, cols.varphi);
    }
    emit(args.out, j.dump(2) + "\n");
    return 0;
}

struct RiskCurveArgs {
    std::string predictions;
    std::string kind = "mce";
    std::string scoring;
    double temperature = 1.0;
    std::string spec;
    std::string data;
    std::string out;
};

int cmd_risk_curve(const RiskCurveArgs& args) {
    std::istringstream pred_in(read_file(args.predictions));
    const IngestResult ingest = ingest_predictions(pred_in);
    const ScoreSeries series = resolve_scores(ingest, args.scoring, args.temperature);
    const std::vector<double> scores = series.scores();
    const RiskKind kind = parse_risk_kind(args.kind);

    std::vector<int> indicators;
    if (kind == RiskKind::mce) {
        for (std::size_t i = 0; i < ingest.records.size(); ++i) {
            indicators.push_back(mis_indicator(ingest.labels[i], ingest.records[i].y_hat()));
        }
    } else {
        if (args.spec.empty() || args.data.empty()) {
            throw InvalidParameterError("mbc curves need --spec and --data");
        }
        const MixtureSpec spec = mixture_spec_from_json(read_file(args.spec));
        std::istringstream data_in(read_file(args.data));
        const Dataset ds = read_dataset_csv(data_in);
        const std::vector<OracleAnnotation> annotations =
            annotate(spec, ds.samples, ingest.records);
        for (const auto& a : annotations) indicators.push_back(1 - a.bayes_agree);
    }

    const RiskCurve curve = risk_curve(scores, indicators, kind);
    std::ostringstream out;
    write_risk_curve_csv(curve, out);
    emit(args.out, out.str());
    return 0;
}

struct CalibrateArgs {
    std::string curve;
    double gamma = 0.05;
    std::string out;
};

int cmd_calibrate(const CalibrateArgs& args) {
    std::istringstream curve_in(read_file(args.curve));
    const RiskCurve curve = read_risk_curve_csv(curve_in);
    const CalibratedGate gate = calibrate_gate(curve, args.gamma);
    emit(args.out, gate.to_json() + "\n");
    return 0;
}

struct ExperimentArgs {
    std::string grid;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::string out;
};

int cmd_experiment(const ExperimentArgs& args) {
    GridConfig config;
    if (!args.grid.empty()) {
        config = GridConfig::from_json(read_file(args.grid));
    } else if (args.preset == "desk") {
        config = GridConfig::desk_preset();
    } else if (args.preset == "full") {
        config = GridConfig::full_grid();
    } else if (args.preset.empty()) {
        throw InvalidParameterError("pass --grid FILE or --preset desk|full");
    } else {
        throw InvalidParameterError("unknown preset '" + args.preset + "'");
    }
    if (args.seed.has_value()) {
        config.master_seed = *args.seed;
    } else if (args.grid.empty() && std::getenv("UQSCORE_SEED") != nullptr) {
        config.master_seed = resolve_seed(std::nullopt);
    }

    std::cerr << "running " << count_runs(config) << " runs with " << args.workers
              << " worker(s)\n";
    const std::vector<RunRecord> records = run_grid(config, args.workers, &std::cerr);
    std::ostringstream out;
    write_run_records(records, out);
    emit(args.out, out.str());
    return 0;
}

struct ReportArgs {
    std::string runs;
    std::string out_dir;
    double alpha = 0.95;
};

int cmd_report(const ReportArgs& args) {
    std::istringstream runs_in(read_file(args.runs));
    const std::vector<RunRecord> records = read_run_records(runs_in);

    nlohmann::ordered_json table = nlohmann::ordered_json::parse(aggregate_table(records, args.alpha));
    const std::pair<std::string, std::string> axes[] = {{"kendall_phi", "uq_auc"},
                                                        {"kendall_varphi", "uq_c_index"}};
    nlohmann::ordered_json summaries;
    for (const auto& [x_axis, y_axis] : axes) {
        const std::string name = "scatter_" + y_axis + "_vs_" + x_axis;
        write_file(args.out_dir + "/" + name + ".csv", emit_scatter(records, x_axis, y_axis));
        const ScatterSummary summary = scatter_summary(records, x_axis, y_axis);
        nlohmann::ordered_json js;
        js["n_ok"] = summary.n_ok;
        js["n_negative_x"] = summary.n_negative_x;
        if (summary.frac_y_below_half.has_value()) {
            js["frac_y_below_half"] = *summary.frac_y_below_half;
        } else {
            js["frac_y_below_half"] = nullptr;
        }
        summaries[name] = std::move(js);
    }
    table["scatter_summaries"] = std::move(summaries);
    write_file(args.out_dir + "/table.json", table.dump(2) + "\n");
    std::cerr << "wrote table.json and scatter CSVs to " << args.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evaluation toolkit for uncertainty scorings of binary classifiers"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "draw a synthetic mixture dataset");
    generate->add_option("--seed", gen.seed, "master seed (falls back to UQSCORE_SEED, then 7)");
    generate->add_option("--n", gen.n, "total sample count")->capture_default_str();
    generate->add_option("--tau", gen.tau, "std of the center draw")->capture_default_str();
    generate->add_option("--sigma", gen.sigma, "isotropic component std")->capture_default_str();
    generate->add_option("--p", gen.p, "P(Y=1)")->capture_default_str();
    generate->add_option("--train", gen.train_n, "train split size")->capture_default_str();
    generate->add_flag("--no-stratify", gen.no_stratify, "independent Bernoulli labels");
    generate->add_option("--calib-fraction", gen.calib_fraction,
                         "share of the test split tagged calibration")
        ->capture_default_str();
    generate->add_option("--out", gen.out, "output CSV path (default stdout)");
    generate->add_option("--spec-out", gen.spec_out, "also write the mixture spec JSON here");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train one MLP on a dataset split");
    train_cmd->add_option("--data", tr.data, "dataset CSV")->required();
    train_cmd->add_option("--split", tr.split, "split to train on")->capture_default_str();
    train_cmd->add_option("--hidden", tr.hidden, "hidden layer sizes, comma separated")
        ->capture_default_str();
    train_cmd->add_option("--dropout", tr.dropout, "dropout rate on hidden activations")
        ->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--batch", tr.batch, "mini-batch size")->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "training seed (falls back to UQSCORE_SEED, then 7)");
    train_cmd->add_option("--out", tr.out, "output model JSON path (default stdout)");

    ScoreArgs sc;
    auto* score_cmd = app.add_subcommand("score", "emit prediction NDJSON with a score column");
    score_cmd->add_option("--data", sc.data, "dataset CSV")->required();
    score_cmd->add_option("--split", sc.split, "split to score")->capture_default_str();
    score_cmd->add_option("--model", sc.models, "model JSON (repeat for an ensemble)")->required();
    score_cmd->add_option("--backbone", sc.backbone, "softmax | deep_ensemble | mc_dropout")
        ->capture_default_str();
    score_cmd->add_option("--n-mc", sc.n_mc, "stochastic passes for mc_dropout")
        ->capture_default_str();
    score_cmd->add_option("--scoring", sc.scoring, "scoring name")->capture_default_str();
    score_cmd->add_option("--temperature", sc.temperature, "free energy temperature")
        ->capture_default_str();
    score_cmd->add_option("--seed", sc.seed, "inference seed (falls back to UQSCORE_SEED, then 7)");
    score_cmd->add_option("--out", sc.out, "output NDJSON path (default stdout)");

    MetricsArgs me;
    auto* metrics_cmd = app.add_subcommand("metrics", "metric report from prediction NDJSON");
    metrics_cmd->add_option("--predictions", me.predictions, "prediction NDJSON")->required();
    metrics_cmd->add_option("--scoring", me.scoring,
                            "recompute this scoring instead of the embedded score column");
    metrics_cmd->add_option("--temperature", me.temperature, "free energy temperature")
        ->capture_default_str();
    metrics_cmd->add_option("--spec", me.spec, "mixture spec JSON for the Kendall columns");
    metrics_cmd->add_option("--data", me.data, "dataset CSV for the Kendall columns");
    metrics_cmd->add_option("--alpha", me.alpha, "confidence level")->capture_default_str();
    metrics_cmd->add_option("--out", me.out, "output JSON path (default stdout)");

    RiskCurveArgs rc;
    auto* risk_cmd = app.add_subcommand("risk-curve", "empirical conditional risk curve CSV");
    risk_cmd->add_option("--predictions", rc.predictions, "prediction NDJSON")->required();
    risk_cmd->add_option("--kind", rc.kind, "mce | mbc")->capture_default_str();
    risk_cmd->add_option("--scoring", rc.scoring,
                         "recompute this scoring instead of the embedded score column");
    risk_cmd->add_option("--temperature", rc.temperature, "free energy temperature")
        ->capture_default_str();
    risk_cmd->add_option("--spec", rc.spec, "mixture spec JSON (mbc only)");
    risk_cmd->add_option("--data", rc.data, "dataset CSV (mbc only)");
    risk_cmd->add_option("--out", rc.out, "output CSV path (default stdout)");

    CalibrateArgs ca;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "pick the largest feasible gate");
    calibrate_cmd->add_option("--curve", ca.curve, "risk curve CSV")->required();
    calibrate_cmd->add_option("--gamma", ca.gamma, "risk budget")->required();
    calibrate_cmd->add_option("--out", ca.out, "output JSON path (default stdout)");

    ExperimentArgs ex;
    auto* experiment_cmd = app.add_subcommand("experiment", "run a hyperparameter grid");
    experiment_cmd->add_option("--grid", ex.grid, "grid config JSON");
    experiment_cmd->add_option("--preset", ex.preset, "desk | full (instead of --grid)");
    experiment_cmd->add_option("--seed", ex.seed, "master seed override");
    experiment_cmd->add_option("--workers", ex.workers, "worker threads")->capture_default_str();
    experiment_cmd->add_option("--out", ex.out, "output run-record NDJSON path (default stdout)");

    ReportArgs re;
    auto* report_cmd = app.add_subcommand("report", "aggregate run records into a table");
    report_cmd->add_option("--runs", re.runs, "run-record NDJSON")->required();
    report_cmd->add_option("--out-dir", re.out_dir, "output directory")->required();
    report_cmd->add_option("--alpha", re.alpha, "confidence level")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage-error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (score_cmd->parsed()) return cmd_score(sc);
        if (metrics_cmd->parsed()) return cmd_metrics(me);
        if (risk_cmd->parsed()) return cmd_risk_curve(rc);
        if (calibrate_cmd->parsed()) return cmd_calibrate(ca);
        if (experiment_cmd->parsed()) return cmd_experiment(ex);
        if (report_cmd->parsed()) return cmd_report(re);
    } catch (const uqscore::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "io-error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
