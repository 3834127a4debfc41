#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uqscore/metrics.hpp"
#include "uqscore/mixture.hpp"
#include "uqscore/mlp.hpp"

namespace uqscore {

struct DatasetConfig {
    std::size_t n = 1000;
    double tau = 1.0;
    double sigma = 1.0;
    double p = 0.5;
    std::size_t train_n = 600;
    bool stratify = true;
    double calib_fraction = 0.0;
};

// Hyperparameter sweep over backbones. One dataset is drawn per
// master_seed and shared by every cell; each cell derives its own seed
// from (master_seed, cell id), so the run set is independent of execution
// order and worker count.
struct GridConfig {
    std::uint64_t master_seed = 7;
    DatasetConfig dataset;
    std::vector<double> learning_rates{0.005, 0.025, 0.05};
    std::vector<std::vector<std::size_t>> hidden_layouts{{64, 32}, {32, 32}, {32, 16}, {64}};
    std::vector<std::size_t> ensemble_sizes{5, 10};
    std::vector<std::size_t> mc_samples{10, 50, 100};
    std::vector<double> dropout_rates{0.1, 0.3, 0.5};
    std::size_t epochs = 50;
    std::size_t batch_size = 504;
    std::vector<std::string> backbones{"softmax", "deep_ensemble", "mc_dropout"};
    // Scoring sets per backbone kind; filled with the defaults below when
    // a kind is missing.
    std::map<std::string, std::vector<std::string>> scorings;

    void validate() const;
    std::vector<std::string> scoring_set(const std::string& backbone) const;

    static GridConfig full_grid();
    static GridConfig desk_preset();

    std::string to_json() const;
    static GridConfig from_json(const std::string& text);
};

struct GridCell {
    BackboneKind kind = BackboneKind::softmax;
    double learning_rate = 0.0;
    std::vector<std::size_t> hidden;
    std::size_t n_ensemble = 0; // deep_ensemble only
    std::size_t n_mc = 0;       // mc_dropout only
    double dropout_rate = 0.0;  // mc_dropout only
    std::vector<std::string> scorings;
    std::string cell_id;
};

std::vector<GridCell> enumerate_cells(const GridConfig& config);
std::size_t count_runs(const GridConfig& config);

struct RunRecord {
    std::string run_id;
    std::string backbone;
    double learning_rate = 0.0;
    std::vector<std::size_t> hidden;
    std::size_t n_ensemble = 0;
    std::size_t n_mc = 0;
    double dropout_rate = 0.0;
    std::string scoring;
    std::string status = "ok"; // "ok" or "skipped"
    std::string reason;        // set when skipped
    MetricReport metrics;
    double kendall_phi = 0.0;
    double kendall_varphi = 0.0;
};

// Runs every cell: trains the cell's backbone, evaluates each of its
// scorings on the shared test split. Degenerate cells are recorded as
// skipped, never dropped. workers > 1 distributes cells over threads
// without changing any output byte.
std::vector<RunRecord> run_grid(const GridConfig& config, std::size_t workers = 1,
                                std::ostream* log = nullptr);

void write_run_records(const std::vector<RunRecord>& records, std::ostream& out);
std::vector<RunRecord> read_run_records(std::istream& in);

// Pearson/Fisher correlations between each metric column and each Kendall
// column over the ok runs, plus run counts. Requires >= 4 ok runs.
std::string aggregate_table(const std::vector<RunRecord>& records, double alpha = 0.95);

// Scatter CSV for plotting; x_axis in {kendall_phi, kendall_varphi},
// y_axis in {uq_auc, uq_c_index}. Skipped runs are omitted.
std::string emit_scatter(const std::vector<RunRecord>& records, const std::string& x_axis,
                         const std::string& y_axis);

struct ScatterSummary {
    std::uint64_t n_ok = 0;
    std::uint64_t n_negative_x = 0;
    // Fraction of negative-x runs with y < 0.5; empty when none exist.
    std::optional<double> frac_y_below_half;
};

ScatterSummary scatter_summary(const std::vector<RunRecord>& records, const std::string& x_axis,
                               const std::string& y_axis);

struct IngestResult {
    std::vector<PredictionRecord> records;
    std::vector<int> labels; // y_true aligned with records
    std::optional<ScoreSeries> scores;
};

// Reads prediction NDJSON (one object per line: id, y_true, probs,
// optional logits, optional score). Violations are reported with their
// line number. Member probabilities may be off by up to 1e-6 before the
// line is rejected.
IngestResult ingest_predictions(std::istream& in);

// Inverse of ingest_predictions; scores (optional) must be aligned.
void write_predictions_ndjson(const std::vector<PredictionRecord>& records,
                              const std::vector<int>& labels, std::ostream& out,
                              const ScoreSeries* scores = nullptr);

} // namespace uqscore
