#include "uqscore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "uqscore/rng.hpp"
#include "uqscore/scoring.hpp"
#include "uqscore/text.hpp"

namespace uqscore {

namespace {

const std::vector<std::string>& default_scorings(BackboneKind kind) {
    static const std::vector<std::string> single{"entropy", "free_energy", "variance"};
    static const std::vector<std::string> multi{"entropy", "aleatoric_entropy", "free_energy",
                                                "mutual_information", "variance"};
    return kind == BackboneKind::softmax ? single : multi;
}

std::string fmt_compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}

std::string layout_tag(const std::vector<std::size_t>& hidden) {
    std::string tag;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i > 0) tag += '-';
        tag += std::to_string(hidden[i]);
    }
    return tag;
}

} // namespace

void GridConfig::validate() const {
    if (dataset.n < 4) {
        throw InvalidParameterError("grid dataset too small");
    }
    if (dataset.train_n == 0 || dataset.train_n >= dataset.n) {
        throw InvalidParameterError("train size must leave a non-empty test split");
    }
    if (learning_rates.empty() || hidden_layouts.empty() || backbones.empty()) {
        throw InvalidParameterError("grid axes must be non-empty");
    }
    for (double lr : learning_rates) {
        if (!(lr > 0.0)) {
            throw InvalidParameterError("learning rates must be positive");
        }
    }
    for (const auto& layout : hidden_layouts) {
        MlpConfig probe;
        probe.hidden_sizes = layout;
        probe.validate();
    }
    std::set<std::string> seen_backbones;
    for (const auto& name : backbones) {
        const BackboneKind kind = parse_backbone(name);
        if (!seen_backbones.insert(name).second) {
            throw InvalidParameterError("duplicate backbone '" + name + "'");
        }
        if (kind == BackboneKind::deep_ensemble) {
            if (ensemble_sizes.empty()) {
                throw InvalidParameterError("deep_ensemble needs ensemble sizes");
            }
            for (std::size_t m : ensemble_sizes) {
                if (m < 2) {
                    throw InvalidParameterError("ensemble sizes must be >= 2");
                }
            }
        }
        if (kind == BackboneKind::mc_dropout) {
            if (mc_samples.empty() || dropout_rates.empty()) {
                throw InvalidParameterError("mc_dropout needs mc sample counts and dropout rates");
            }
            for (std::size_t s : mc_samples) {
                if (s < 2) {
                    throw InvalidParameterError("mc sample counts must be >= 2");
                }
            }
            for (double r : dropout_rates) {
                if (!(r > 0.0 && r < 1.0)) {
                    throw InvalidParameterError("dropout rates must lie in (0,1)");
                }
            }
        }
        // Scoring sets must match what the backbone can deliver.
        for (const auto& sc : scoring_set(name)) {
            const ScoringSpec spec = ScoringSpec::parse(sc);
            if (kind == BackboneKind::softmax && spec.ensemble_flavored() &&
                spec.kind != ScoringKind::entropy && spec.kind != ScoringKind::total_entropy) {
                throw InvalidParameterError("scoring '" + sc + "' needs an ensemble backbone");
            }
        }
    }
    if (epochs == 0 || batch_size == 0) {
        throw InvalidParameterError("epochs and batch size must be positive");
    }
}

std::vector<std::string> GridConfig::scoring_set(const std::string& backbone) const {
    auto it = scorings.find(backbone);
    if (it != scorings.end()) {
        if (it->second.empty()) {
            throw InvalidParameterError("scoring set for '" + backbone + "' is empty");
        }
        return it->second;
    }
    return default_scorings(parse_backbone(backbone));
}

GridConfig GridConfig::full_grid() { return GridConfig{}; }

GridConfig GridConfig::desk_preset() {
    GridConfig cfg;
    cfg.learning_rates = {0.05};
    cfg.hidden_layouts = {{64, 32}, {64}};
    cfg.ensemble_sizes = {5};
    cfg.mc_samples = {50};
    cfg.dropout_rates = {0.5};
    return cfg;
}

std::string GridConfig::to_json() const {
    nlohmann::ordered_json j;
    j["master_seed"] = master_seed;
    j["dataset"]["n"] = dataset.n;
    j["dataset"]["tau"] = dataset.tau;
    j["dataset"]["sigma"] = dataset.sigma;
    j["dataset"]["p"] = dataset.p;
    j["dataset"]["train_n"] = dataset.train_n;
    j["dataset"]["stratify"] = dataset.stratify;
    j["dataset"]["calib_fraction"] = dataset.calib_fraction;
    j["learning_rates"] = learning_rates;
    j["hidden_layouts"] = hidden_layouts;
    j["ensemble_sizes"] = ensemble_sizes;
    j["mc_samples"] = mc_samples;
    j["dropout_rates"] = dropout_rates;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["backbones"] = backbones;
    if (!scorings.empty()) j["scorings"] = scorings;
    return j.dump(2);
}

GridConfig GridConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("grid config JSON: ") + e.what());
    }
    GridConfig cfg;
    try {
        if (j.contains("master_seed")) j.at("master_seed").get_to(cfg.master_seed);
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            if (d.contains("n")) d.at("n").get_to(cfg.dataset.n);
            if (d.contains("tau")) d.at("tau").get_to(cfg.dataset.tau);
            if (d.contains("sigma")) d.at("sigma").get_to(cfg.dataset.sigma);
            if (d.contains("p")) d.at("p").get_to(cfg.dataset.p);
            if (d.contains("train_n")) d.at("train_n").get_to(cfg.dataset.train_n);
            if (d.contains("stratify")) d.at("stratify").get_to(cfg.dataset.stratify);
            if (d.contains("calib_fraction")) d.at("calib_fraction").get_to(cfg.dataset.calib_fraction);
        }
        if (j.contains("learning_rates")) j.at("learning_rates").get_to(cfg.learning_rates);
        if (j.contains("hidden_layouts")) j.at("hidden_layouts").get_to(cfg.hidden_layouts);
        if (j.contains("ensemble_sizes")) j.at("ensemble_sizes").get_to(cfg.ensemble_sizes);
        if (j.contains("mc_samples")) j.at("mc_samples").get_to(cfg.mc_samples);
        if (j.contains("dropout_rates")) j.at("dropout_rates").get_to(cfg.dropout_rates);
        if (j.contains("epochs")) j.at("epochs").get_to(cfg.epochs);
        if (j.contains("batch_size")) j.at("batch_size").get_to(cfg.batch_size);
        if (j.contains("backbones")) j.at("backbones").get_to(cfg.backbones);
        if (j.contains("scorings")) j.at("scorings").get_to(cfg.scorings);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("grid config JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::vector<GridCell> enumerate_cells(const GridConfig& config) {
    config.validate();
    std::vector<GridCell> cells;
    for (const auto& backbone : config.backbones) {
        const BackboneKind kind = parse_backbone(backbone);
        const auto scorings = config.scoring_set(backbone);
        for (double lr : config.learning_rates) {
            for (const auto& layout : config.hidden_layouts) {
                GridCell base;
                base.kind = kind;
                base.learning_rate = lr;
                base.hidden = layout;
                base.scorings = scorings;
                const std::string stem = std::string(backbone_name(kind)) + "/lr" +
                                         fmt_compact(lr) + "/h" + layout_tag(layout);
                switch (kind) {
                case BackboneKind::softmax: {
                    GridCell cell = base;
                    cell.cell_id = stem;
                    cells.push_back(std::move(cell));
                    break;
                }
                case BackboneKind::deep_ensemble: {
                    for (std::size_t m : config.ensemble_sizes) {
                        GridCell cell = base;
                        cell.n_ensemble = m;
                        cell.cell_id = stem + "/m" + std::to_string(m);
                        cells.push_back(std::move(cell));
                    }
                    break;
                }
                case BackboneKind::mc_dropout: {
                    for (std::size_t s : config.mc_samples) {
                        for (double r : config.dropout_rates) {
                            GridCell cell = base;
                            cell.n_mc = s;
                            cell.dropout_rate = r;
                            cell.cell_id =
                                stem + "/mc" + std::to_string(s) + "/dr" + fmt_compact(r);
                            cells.push_back(std::move(cell));
                        }
                    }
                    break;
                }
                }
            }
        }
    }
    return cells;
}

std::size_t count_runs(const GridConfig& config) {
    std::size_t n = 0;
    for (const auto& cell : enumerate_cells(config)) n += cell.scorings.size();
    return n;
}

namespace {

struct SharedData {
    MixtureSpec mix;
    SampleSet train_set;
    SampleSet test_set;
};

std::vector<RunRecord> run_cell(const GridConfig& config, const SharedData& shared,
                                const GridCell& cell) {
    const std::uint64_t cell_seed = derive_seed(config.master_seed, cell.cell_id);

    MlpConfig mlp_config;
    mlp_config.hidden_sizes = cell.hidden;
    mlp_config.dropout_rate = cell.kind == BackboneKind::mc_dropout ? cell.dropout_rate : 0.0;

    TrainConfig train_config;
    train_config.epochs = config.epochs;
    train_config.batch_size = config.batch_size;
    train_config.learning_rate = cell.learning_rate;

    UqBackbone backbone;
    backbone.kind = cell.kind;
    backbone.n_mc = cell.n_mc;
    backbone.inference_seed = derive_seed(cell_seed, "inference");
    const std::size_t n_models = cell.kind == BackboneKind::deep_ensemble ? cell.n_ensemble : 1;
    const std::uint64_t member_base = derive_seed(cell_seed, "member");
    for (std::size_t u = 0; u < n_models; ++u) {
        TrainConfig member_config = train_config;
        member_config.seed = derive_seed(member_base, static_cast<std::uint64_t>(u));
        backbone.models.push_back(train(shared.train_set, mlp_config, member_config));
    }

    const std::vector<PredictionRecord> predictions =
        predict_all(backbone, shared.test_set.samples);
    const std::vector<OracleAnnotation> annotations =
        annotate(shared.mix, shared.test_set.samples, predictions);

    std::vector<int> mis;
    std::vector<double> deltas;
    std::vector<double> phi;
    std::vector<double> varphi;
    std::vector<std::string> ids;
    mis.reserve(annotations.size());
    for (const auto& a : annotations) {
        mis.push_back(a.mis);
        deltas.push_back(a.delta);
        phi.push_back(a.phi);
        varphi.push_back(a.varphi);
        ids.push_back(a.sample_id);
    }

    std::vector<RunRecord> records;
    records.reserve(cell.scorings.size());
    for (const auto& scoring_name : cell.scorings) {
        RunRecord rec;
        rec.run_id = cell.cell_id + "/" + scoring_name;
        rec.backbone = backbone_name(cell.kind);
        rec.learning_rate = cell.learning_rate;
        rec.hidden = cell.hidden;
        rec.n_ensemble = cell.n_ensemble;
        rec.n_mc = cell.n_mc;
        rec.dropout_rate = cell.dropout_rate;
        rec.scoring = scoring_name;
        try {
            const ScoringSpec spec = ScoringSpec::parse(scoring_name);
            const ScoreSeries series = score_records(spec, predictions);
            const std::vector<double> scores = series.scores();
            rec.metrics = compute_metric_report(
                scores, mis, deltas, ids,
                "master_seed=" + std::to_string(config.master_seed) + ";run=" + rec.run_id);
            rec.kendall_phi = kendall_tau(scores, phi);
            rec.kendall_varphi = kendall_tau(scores, varphi);
        } catch (const Error& e) {
            rec.status = "skipped";
            rec.reason = e.what();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

std::vector<RunRecord> run_grid(const GridConfig& config, std::size_t workers,
                                std::ostream* log) {
    config.validate();
    if (workers == 0) {
        throw InvalidParameterError("workers must be positive");
    }

    SharedData shared;
    shared.mix = sample_spec(derive_seed(config.master_seed, "mixture-spec"), config.dataset.tau,
                             config.dataset.sigma, config.dataset.p);
    Dataset ds = split_dataset(
        sample_points(shared.mix, config.dataset.n, derive_seed(config.master_seed, "dataset"),
                      config.dataset.stratify),
        config.dataset.train_n, config.dataset.stratify, config.dataset.calib_fraction);
    shared.train_set = ds.subset(Split::train);
    shared.test_set = ds.subset(Split::test);

    const std::vector<GridCell> cells = enumerate_cells(config);
    std::vector<std::vector<RunRecord>> per_cell(cells.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex log_mutex;
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker_loop = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                per_cell[i] = run_cell(config, shared, cells[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
            if (log != nullptr) {
                std::lock_guard<std::mutex> lock(log_mutex);
                (*log) << "cell " << cells[i].cell_id << " done (" << (i + 1) << "/"
                       << cells.size() << ")\n";
            }
        }
    };

    const std::size_t n_threads = std::min(workers, cells.size());
    if (n_threads <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker_loop);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RunRecord> records;
    for (auto& group : per_cell) {
        for (auto& rec : group) records.push_back(std::move(rec));
    }
    return records;
}

namespace {

nlohmann::ordered_json run_record_to_json(const RunRecord& rec) {
    nlohmann::ordered_json j;
    j["run_id"] = rec.run_id;
    j["backbone"] = rec.backbone;
    j["learning_rate"] = rec.learning_rate;
    j["hidden"] = rec.hidden;
    j["n_ensemble"] = rec.n_ensemble;
    j["n_mc"] = rec.n_mc;
    j["dropout_rate"] = rec.dropout_rate;
    j["scoring"] = rec.scoring;
    j["status"] = rec.status;
    if (rec.status == "skipped") {
        j["reason"] = rec.reason;
    } else {
        j["metrics"] = nlohmann::ordered_json::parse(rec.metrics.to_json());
        j["kendall_phi"] = rec.kendall_phi;
        j["kendall_varphi"] = rec.kendall_varphi;
    }
    return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord rec;
    j.at("run_id").get_to(rec.run_id);
    j.at("backbone").get_to(rec.backbone);
    j.at("learning_rate").get_to(rec.learning_rate);
    j.at("hidden").get_to(rec.hidden);
    j.at("n_ensemble").get_to(rec.n_ensemble);
    j.at("n_mc").get_to(rec.n_mc);
    j.at("dropout_rate").get_to(rec.dropout_rate);
    j.at("scoring").get_to(rec.scoring);
    j.at("status").get_to(rec.status);
    if (rec.status == "skipped") {
        j.at("reason").get_to(rec.reason);
    } else if (rec.status == "ok") {
        rec.metrics = MetricReport::from_json(j.at("metrics").dump());
        j.at("kendall_phi").get_to(rec.kendall_phi);
        j.at("kendall_varphi").get_to(rec.kendall_varphi);
    } else {
        throw SchemaViolationError("run record status must be ok or skipped");
    }
    return rec;
}

} // namespace

void write_run_records(const std::vector<RunRecord>& records, std::ostream& out) {
    for (const auto& rec : records) out << run_record_to_json(rec).dump() << '\n';
}

std::vector<RunRecord> read_run_records(std::istream& in) {
    std::vector<RunRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(run_record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

std::string aggregate_table(const std::vector<RunRecord>& records, double alpha) {
    std::vector<double> auc;
    std::vector<double> cindex;
    std::vector<double> kphi;
    std::vector<double> kvarphi;
    std::uint64_t skipped = 0;
    for (const auto& rec : records) {
        if (rec.status != "ok") {
            ++skipped;
            continue;
        }
        auc.push_back(rec.metrics.uq_auc);
        cindex.push_back(rec.metrics.uq_c_index);
        kphi.push_back(rec.kendall_phi);
        kvarphi.push_back(rec.kendall_varphi);
    }
    if (auc.size() < 4) {
        throw MetricUndefinedError("aggregate_table needs at least 4 ok runs");
    }

    auto corr_json = [&](std::span<const double> a, std::span<const double> b) {
        const CorrelationReport r = pearson_fisher(a, b, alpha);
        nlohmann::ordered_json j;
        j["pearson_r"] = r.pearson_r;
        j["pearson_ci_low"] = r.pearson_ci_low;
        j["pearson_ci_high"] = r.pearson_ci_high;
        j["kendall_tau"] = r.kendall_tau;
        j["alpha"] = r.alpha;
        return j;
    };

    nlohmann::ordered_json j;
    j["n_ok"] = auc.size();
    j["n_skipped"] = skipped;
    j["uq_auc_vs_kendall_phi"] = corr_json(auc, kphi);
    j["uq_auc_vs_kendall_varphi"] = corr_json(auc, kvarphi);
    j["uq_c_index_vs_kendall_phi"] = corr_json(cindex, kphi);
    j["uq_c_index_vs_kendall_varphi"] = corr_json(cindex, kvarphi);
    return j.dump(2);
}

namespace {

double axis_value(const RunRecord& rec, const std::string& axis) {
    if (axis == "kendall_phi") return rec.kendall_phi;
    if (axis == "kendall_varphi") return rec.kendall_varphi;
    if (axis == "uq_auc") return rec.metrics.uq_auc;
    if (axis == "uq_c_index") return rec.metrics.uq_c_index;
    if (axis == "g_auc_direct") return rec.metrics.g_auc_direct;
    if (axis == "g_auc_lemma") return rec.metrics.g_auc_lemma;
    if (axis == "h_auc_lemma") return rec.metrics.h_auc_lemma;
    throw InvalidParameterError("unknown scatter axis '" + axis + "'");
}

} // namespace

std::string emit_scatter(const std::vector<RunRecord>& records, const std::string& x_axis,
                         const std::string& y_axis) {
    std::ostringstream out;
    out << "run_id,backbone," << x_axis << ',' << y_axis << '\n';
    for (const auto& rec : records) {
        if (rec.status != "ok") continue;
        out << rec.run_id << ',' << rec.backbone << ',' << fmt_g17(axis_value(rec, x_axis)) << ','
            << fmt_g17(axis_value(rec, y_axis)) << '\n';
    }
    return out.str();
}

ScatterSummary scatter_summary(const std::vector<RunRecord>& records, const std::string& x_axis,
                               const std::string& y_axis) {
    ScatterSummary summary;
    std::uint64_t below = 0;
    for (const auto& rec : records) {
        if (rec.status != "ok") continue;
        ++summary.n_ok;
        if (axis_value(rec, x_axis) < 0.0) {
            ++summary.n_negative_x;
            if (axis_value(rec, y_axis) < 0.5) ++below;
        }
    }
    if (summary.n_negative_x > 0) {
        summary.frac_y_below_half =
            static_cast<double>(below) / static_cast<double>(summary.n_negative_x);
    }
    return summary;
}

IngestResult ingest_predictions(std::istream& in) {
    IngestResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    bool any_score = false;
    bool all_score = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaViolationError(where + ": " + e.what());
        }
        if (!j.is_object()) {
            throw SchemaViolationError(where + ": expected a JSON object");
        }
        if (!j.contains("id") || !j.at("id").is_string()) {
            throw SchemaViolationError(where + ": missing string field 'id'");
        }
        const std::string id = j.at("id").get<std::string>();
        if (id.empty()) {
            throw SchemaViolationError(where + ": empty id");
        }
        if (!seen_ids.insert(id).second) {
            throw SchemaViolationError(where + ": duplicate id " + id);
        }
        if (!j.contains("y_true") || !j.at("y_true").is_number_integer()) {
            throw SchemaViolationError(where + ": missing integer field 'y_true'");
        }
        const int y = j.at("y_true").get<int>();
        if (y != 0 && y != 1) {
            throw SchemaViolationError(where + ": y_true must be 0 or 1");
        }
        if (!j.contains("probs") || !j.at("probs").is_array() || j.at("probs").empty()) {
            throw SchemaViolationError(where + ": missing non-empty array field 'probs'");
        }
        std::vector<ProbVector> members;
        for (const auto& row : j.at("probs")) {
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
                throw SchemaViolationError(where + ": each probs row must hold two numbers");
            }
            try {
                members.push_back(
                    ProbVector::normalized(row[0].get<double>(), row[1].get<double>(), 1e-6));
            } catch (const Error&) {
                throw SchemaViolationError(where + ": probs row does not normalize within 1e-6");
            }
        }
        std::vector<std::array<double, 2>> logits;
        if (j.contains("logits")) {
            if (!j.at("logits").is_array() || j.at("logits").size() != members.size()) {
                throw SchemaViolationError(where + ": logits must align with probs");
            }
            for (const auto& row : j.at("logits")) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                    !row[1].is_number()) {
                    throw SchemaViolationError(where + ": each logits row must hold two numbers");
                }
                logits.push_back({row[0].get<double>(), row[1].get<double>()});
            }
        }
        if (j.contains("score")) {
            if (!j.at("score").is_number()) {
                throw SchemaViolationError(where + ": score must be a number");
            }
            any_score = true;
            if (!result.scores.has_value()) {
                result.scores.emplace();
                result.scores->name = "score";
            }
            result.scores->values.emplace_back(id, j.at("score").get<double>());
        } else {
            all_score = false;
        }
        result.records.push_back(
            PredictionRecord::from_members(id, std::move(members), std::move(logits)));
        result.labels.push_back(y);
    }
    if (result.records.empty()) {
        throw SchemaViolationError("prediction NDJSON is empty");
    }
    if (any_score && !all_score) {
        throw SchemaViolationError("score present on some lines only");
    }
    if (result.scores.has_value()) result.scores->validate();
    return result;
}

void write_predictions_ndjson(const std::vector<PredictionRecord>& records,
                              const std::vector<int>& labels, std::ostream& out,
                              const ScoreSeries* scores) {
    if (records.size() != labels.size()) {
        throw InvalidParameterError("records and labels must be aligned");
    }
    if (scores != nullptr && scores->values.size() != records.size()) {
        throw InvalidParameterError("scores must be aligned with records");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        nlohmann::ordered_json j;
        j["id"] = rec.sample_id();
        j["y_true"] = labels[i];
        auto probs = nlohmann::ordered_json::array();
        for (const auto& m : rec.members()) {
            probs.push_back(nlohmann::ordered_json::array({m.p0(), m.p1()}));
        }
        j["probs"] = std::move(probs);
        if (rec.has_logits()) {
            auto logits = nlohmann::ordered_json::array();
            for (const auto& l : rec.logits()) {
                logits.push_back(nlohmann::ordered_json::array({l[0], l[1]}));
            }
            j["logits"] = std::move(logits);
        }
        if (scores != nullptr) {
            if (scores->values[i].first != rec.sample_id()) {
                throw InvalidParameterError("score ids must match record order");
            }
            j["score"] = scores->values[i].second;
        }
        out << j.dump() << '\n';
    }
}

} // namespace uqscore
