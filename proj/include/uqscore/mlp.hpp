#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uqscore/domain.hpp"
#include "uqscore/mixture.hpp"
#include "uqscore/rng.hpp"

namespace uqscore {

// Fully connected net: 2 inputs, ReLU hidden layers, 2 output logits.
struct MlpConfig {
    std::vector<std::size_t> hidden_sizes{64, 32};
    double dropout_rate = 0.0; // applied to hidden activations only

    void validate() const;
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 504;
    double learning_rate = 0.025;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w; // row-major, out x in
    std::vector<double> b; // out
};

struct MlpModel {
    MlpConfig config;
    std::vector<Layer> layers;
    std::uint64_t training_seed = 0;
    std::vector<double> epoch_loss; // training curve, not serialized

    std::size_t parameter_count() const;
};

struct ForwardResult {
    std::array<double, 2> logits{0.0, 0.0};
    ProbVector probs = ProbVector::checked(0.5, 0.5);
};

// Dropout scale factors per hidden layer: 0 for dropped units,
// 1/(1-rate) for survivors. One entry per hidden layer.
using MaskSet = std::vector<std::vector<double>>;

// Glorot-uniform weights, zero biases.
MlpModel init_model(const MlpConfig& config, std::uint64_t seed);

// Deterministic when dropout_rng is null; otherwise hidden activations are
// zeroed i.i.d. at the configured rate with survivors rescaled (inverted
// dropout).
ForwardResult forward(const MlpModel& model, const std::array<double, 2>& x,
                      Rng* dropout_rng = nullptr);

// Forward pass with externally fixed masks (finite differencing needs the
// exact same noise on both sides).
ForwardResult forward_masked(const MlpModel& model, const std::array<double, 2>& x,
                             const MaskSet* masks);

// Hidden pre-activations of a single pass; index i holds layer i's values
// before ReLU. Used by tests that look at dropout in expectation.
std::vector<std::vector<double>> hidden_preactivations(const MlpModel& model,
                                                       const std::array<double, 2>& x,
                                                       Rng* dropout_rng = nullptr);

MaskSet draw_masks(const MlpConfig& config, Rng& rng);

// Mean cross-entropy over the batch; masks (optional, per sample) freeze
// the dropout noise.
double ce_loss(const MlpModel& model, const std::vector<LabeledSample>& batch,
               const std::vector<MaskSet>* masks = nullptr);

// Gradient of ce_loss in the flat parameter order layer0.w, layer0.b,
// layer1.w, ...
std::vector<double> ce_gradient(const MlpModel& model, const std::vector<LabeledSample>& batch,
                                const std::vector<MaskSet>* masks = nullptr);

// Mini-batch Adam on shuffled epochs. Records per-epoch training loss.
MlpModel train(const SampleSet& data, const MlpConfig& config, const TrainConfig& train_config);

// Max relative error between the analytic gradient and central finite
// differences on a random subset of coordinates (up to 50). Coordinates
// whose probes straddle a ReLU gate flip are skipped: the difference
// quotient is not a derivative estimate across a kink.
double grad_check(const MlpModel& model, const std::vector<LabeledSample>& batch,
                  double epsilon = 1e-5, std::uint64_t seed = 12345);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

enum class BackboneKind { softmax, deep_ensemble, mc_dropout };

const char* backbone_name(BackboneKind kind);
BackboneKind parse_backbone(const std::string& name);

// A trained predictor plus the recipe for turning it into a member set:
// one deterministic pass, one pass per ensemble member, or n_mc stochastic
// passes with the dropout noise keyed by (inference seed, sample id, pass).
struct UqBackbone {
    BackboneKind kind = BackboneKind::softmax;
    std::vector<MlpModel> models;
    std::size_t n_mc = 0;
    std::uint64_t inference_seed = 0;

    void validate() const;
};

PredictionRecord predict(const UqBackbone& backbone, const LabeledSample& sample);

std::vector<PredictionRecord> predict_all(const UqBackbone& backbone,
                                          const std::vector<LabeledSample>& samples);

} // namespace uqscore
