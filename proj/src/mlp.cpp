#include "uqscore/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "uqscore/errors.hpp"

namespace uqscore {

void MlpConfig::validate() const {
    if (hidden_sizes.empty()) {
        throw InvalidParameterError("at least one hidden layer is required");
    }
    for (std::size_t h : hidden_sizes) {
        if (h == 0) {
            throw InvalidParameterError("hidden layer sizes must be positive");
        }
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw InvalidParameterError("dropout rate must lie in [0,1)");
    }
}

void TrainConfig::validate() const {
    if (epochs == 0) {
        throw InvalidParameterError("epochs must be positive");
    }
    if (batch_size == 0) {
        throw InvalidParameterError("batch size must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidParameterError("learning rate must be non-negative");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw InvalidParameterError("adam betas must lie in [0,1)");
    }
    if (!(adam_eps > 0.0)) {
        throw InvalidParameterError("adam epsilon must be positive");
    }
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

MlpModel init_model(const MlpConfig& config, std::uint64_t seed) {
    config.validate();
    MlpModel model;
    model.config = config;
    model.training_seed = seed;
    Rng rng(derive_seed(seed, "init"));
    std::size_t fan_in = 2;
    std::vector<std::size_t> widths = config.hidden_sizes;
    widths.push_back(2);
    for (std::size_t out : widths) {
        Layer layer;
        layer.in = fan_in;
        layer.out = out;
        layer.w.resize(out * fan_in);
        layer.b.assign(out, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + out));
        for (double& w : layer.w) w = limit * (2.0 * rng.uniform() - 1.0);
        model.layers.push_back(std::move(layer));
        fan_in = out;
    }
    return model;
}

namespace {

struct Trace {
    // Per hidden layer: pre-activation, activation after ReLU and dropout,
    // and the dropout scale actually applied.
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    std::vector<std::vector<double>> scale;
    std::array<double, 2> logits{0.0, 0.0};
};

ProbVector softmax2(const std::array<double, 2>& logits) {
    const double d = logits[1] - logits[0];
    double p1;
    if (d >= 0.0) {
        p1 = 1.0 / (1.0 + std::exp(-d));
    } else {
        const double e = std::exp(d);
        p1 = e / (1.0 + e);
    }
    return ProbVector::checked(1.0 - p1, p1);
}

void affine(const Layer& layer, const std::vector<double>& in, std::vector<double>& out) {
    out.assign(layer.out, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double* wrow = layer.w.data() + r * layer.in;
        double acc = layer.b[r];
        for (std::size_t c = 0; c < layer.in; ++c) acc += wrow[c] * in[c];
        out[r] = acc;
    }
}

// masks: fixed scales per hidden layer; rng: draw fresh ones; both null:
// deterministic pass.
Trace run_forward(const MlpModel& model, const std::array<double, 2>& x, Rng* rng,
                  const MaskSet* masks) {
    const std::size_t n_hidden = model.config.hidden_sizes.size();
    Trace trace;
    trace.pre.resize(n_hidden);
    trace.act.resize(n_hidden);
    trace.scale.resize(n_hidden);

    std::vector<double> cur(x.begin(), x.end());
    const double rate = model.config.dropout_rate;
    const double keep_scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
    for (std::size_t li = 0; li < n_hidden; ++li) {
        affine(model.layers[li], cur, trace.pre[li]);
        auto& act = trace.act[li];
        act.resize(trace.pre[li].size());
        for (std::size_t u = 0; u < act.size(); ++u) {
            act[u] = trace.pre[li][u] > 0.0 ? trace.pre[li][u] : 0.0;
        }
        auto& scale = trace.scale[li];
        if (masks != nullptr) {
            scale = (*masks)[li];
            if (scale.size() != act.size()) {
                throw InvalidParameterError("mask width does not match the layer");
            }
        } else if (rng != nullptr) {
            scale.resize(act.size());
            for (double& s : scale) s = rng->uniform() < rate ? 0.0 : keep_scale;
        } else {
            scale.assign(act.size(), 1.0);
        }
        for (std::size_t u = 0; u < act.size(); ++u) act[u] *= scale[u];
        cur = act;
    }
    std::vector<double> logits;
    affine(model.layers.back(), cur, logits);
    trace.logits = {logits[0], logits[1]};
    return trace;
}

// Accumulates d(mean CE)/d(params) for one sample into grad (flat layout);
// inv_batch is 1/batch so the mean is formed on the fly.
void backprop_into(const MlpModel& model, const std::array<double, 2>& x, int y,
                   const Trace& trace, double inv_batch, std::vector<double>& grad) {
    const ProbVector probs = softmax2(trace.logits);
    std::vector<double> delta{probs.p0() - (y == 0 ? 1.0 : 0.0),
                              probs.p1() - (y == 1 ? 1.0 : 0.0)};
    for (double& d : delta) d *= inv_batch;

    // Flat offsets of each layer's w block.
    std::vector<std::size_t> offset(model.layers.size());
    std::size_t pos = 0;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        offset[li] = pos;
        pos += model.layers[li].w.size() + model.layers[li].b.size();
    }

    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const Layer& layer = model.layers[li];
        const std::vector<double>* input = nullptr;
        std::vector<double> x_vec;
        if (li == 0) {
            x_vec.assign(x.begin(), x.end());
            input = &x_vec;
        } else {
            input = &trace.act[li - 1];
        }
        double* gw = grad.data() + offset[li];
        double* gb = gw + layer.w.size();
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            gb[r] += d;
            double* grow = gw + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * (*input)[c];
        }
        if (li == 0) break;
        std::vector<double> next(layer.in, 0.0);
        for (std::size_t c = 0; c < layer.in; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < layer.out; ++r) acc += layer.w[r * layer.in + c] * delta[r];
            // Through the dropout scale and the ReLU gate.
            const double gate = trace.pre[li - 1][c] > 0.0 ? trace.scale[li - 1][c] : 0.0;
            next[c] = acc * gate;
        }
        delta = std::move(next);
    }
}

double sample_ce(const Trace& trace, int y) {
    // Numerically stable -log softmax[y].
    const double cy = trace.logits[y == 0 ? 0 : 1];
    const double co = trace.logits[y == 0 ? 1 : 0];
    const double d = co - cy;
    return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

// Mean CE plus a hash of the ReLU gate pattern over the whole batch. Two
// probe points with different patterns lie on different linear pieces, so
// a finite difference between them is not a derivative estimate.
double ce_loss_with_gates(const MlpModel& model, const std::vector<LabeledSample>& batch,
                          const std::vector<MaskSet>* masks, std::uint64_t* gates) {
    double sum = 0.0;
    std::uint64_t hash = 1469598103934665603ull;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Trace trace = run_forward(model, batch[i].x, nullptr,
                                  masks != nullptr ? &(*masks)[i] : nullptr);
        sum += sample_ce(trace, batch[i].y);
        for (const auto& layer_pre : trace.pre) {
            for (double pre : layer_pre) {
                hash ^= pre > 0.0 ? 0x9eu : 0x31u;
                hash *= 1099511628211ull;
            }
        }
    }
    *gates = hash;
    return sum / static_cast<double>(batch.size());
}

} // namespace

ForwardResult forward(const MlpModel& model, const std::array<double, 2>& x, Rng* dropout_rng) {
    Rng* rng = (dropout_rng != nullptr && model.config.dropout_rate > 0.0) ? dropout_rng : nullptr;
    // A rate-zero draw still consumes nothing and matches the plain pass.
    Trace trace = run_forward(model, x, rng, nullptr);
    return ForwardResult{trace.logits, softmax2(trace.logits)};
}

ForwardResult forward_masked(const MlpModel& model, const std::array<double, 2>& x,
                             const MaskSet* masks) {
    Trace trace = run_forward(model, x, nullptr, masks);
    return ForwardResult{trace.logits, softmax2(trace.logits)};
}

std::vector<std::vector<double>> hidden_preactivations(const MlpModel& model,
                                                       const std::array<double, 2>& x,
                                                       Rng* dropout_rng) {
    Rng* rng = (dropout_rng != nullptr && model.config.dropout_rate > 0.0) ? dropout_rng : nullptr;
    Trace trace = run_forward(model, x, rng, nullptr);
    return trace.pre;
}

MaskSet draw_masks(const MlpConfig& config, Rng& rng) {
    config.validate();
    const double rate = config.dropout_rate;
    const double keep_scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
    MaskSet masks(config.hidden_sizes.size());
    for (std::size_t li = 0; li < config.hidden_sizes.size(); ++li) {
        masks[li].resize(config.hidden_sizes[li]);
        for (double& s : masks[li]) s = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return masks;
}

double ce_loss(const MlpModel& model, const std::vector<LabeledSample>& batch,
               const std::vector<MaskSet>* masks) {
    if (batch.empty()) {
        throw InvalidParameterError("batch must be non-empty");
    }
    if (masks != nullptr && masks->size() != batch.size()) {
        throw InvalidParameterError("need one mask set per sample");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Trace trace = run_forward(model, batch[i].x, nullptr,
                                  masks != nullptr ? &(*masks)[i] : nullptr);
        sum += sample_ce(trace, batch[i].y);
    }
    return sum / static_cast<double>(batch.size());
}

std::vector<double> ce_gradient(const MlpModel& model, const std::vector<LabeledSample>& batch,
                                const std::vector<MaskSet>* masks) {
    if (batch.empty()) {
        throw InvalidParameterError("batch must be non-empty");
    }
    if (masks != nullptr && masks->size() != batch.size()) {
        throw InvalidParameterError("need one mask set per sample");
    }
    std::vector<double> grad(model.parameter_count(), 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Trace trace = run_forward(model, batch[i].x, nullptr,
                                  masks != nullptr ? &(*masks)[i] : nullptr);
        backprop_into(model, batch[i].x, batch[i].y, trace, inv_batch, grad);
    }
    return grad;
}

MlpModel train(const SampleSet& data, const MlpConfig& config, const TrainConfig& train_config) {
    config.validate();
    train_config.validate();
    const auto& samples = data.samples;
    if (samples.size() < 2) {
        throw DegenerateDataError("training needs at least 2 samples");
    }
    bool seen[2] = {false, false};
    for (const auto& s : samples) seen[s.y == 1 ? 1 : 0] = true;
    if (!seen[0] || !seen[1]) {
        throw DegenerateDataError("training split contains a single class");
    }

    MlpModel model = init_model(config, train_config.seed);
    Rng shuffle_rng(derive_seed(train_config.seed, "shuffle"));
    Rng dropout_rng(derive_seed(train_config.seed, "dropout"));

    const std::size_t n_params = model.parameter_count();
    std::vector<double> m(n_params, 0.0);
    std::vector<double> v(n_params, 0.0);
    std::vector<double> grad(n_params);
    std::size_t step = 0;

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const bool use_dropout = config.dropout_rate > 0.0;
    std::vector<Layer*> layer_ptrs;
    for (Layer& l : model.layers) layer_ptrs.push_back(&l);

    auto param_at = [&](std::size_t flat) -> double& {
        for (Layer* l : layer_ptrs) {
            if (flat < l->w.size()) return l->w[flat];
            flat -= l->w.size();
            if (flat < l->b.size()) return l->b[flat];
            flat -= l->b.size();
        }
        throw InvalidParameterError("parameter index out of range");
    };

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_ce = 0.0;
        for (std::size_t start = 0; start < samples.size(); start += train_config.batch_size) {
            const std::size_t stop = std::min(start + train_config.batch_size, samples.size());
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const LabeledSample& s = samples[order[k]];
                Trace trace = run_forward(model, s.x, use_dropout ? &dropout_rng : nullptr, nullptr);
                epoch_ce += sample_ce(trace, s.y);
                backprop_into(model, s.x, s.y, trace, inv_batch, grad);
            }
            ++step;
            const double bc1 = 1.0 - std::pow(train_config.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(train_config.adam_beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = train_config.adam_beta1 * m[i] + (1.0 - train_config.adam_beta1) * grad[i];
                v[i] = train_config.adam_beta2 * v[i] +
                       (1.0 - train_config.adam_beta2) * grad[i] * grad[i];
                const double update = train_config.learning_rate * (m[i] / bc1) /
                                      (std::sqrt(v[i] / bc2) + train_config.adam_eps);
                param_at(i) -= update;
            }
        }
        model.epoch_loss.push_back(epoch_ce / static_cast<double>(samples.size()));
    }
    return model;
}

double grad_check(const MlpModel& model, const std::vector<LabeledSample>& batch, double epsilon,
                  std::uint64_t seed) {
    if (!(epsilon > 0.0)) {
        throw InvalidParameterError("epsilon must be positive");
    }
    Rng rng(derive_seed(seed, "grad-check"));

    // Freeze one mask set per sample so both sides of the difference see
    // the same noise.
    const std::vector<MaskSet>* masks_ptr = nullptr;
    std::vector<MaskSet> masks;
    if (model.config.dropout_rate > 0.0) {
        masks.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) masks.push_back(draw_masks(model.config, rng));
        masks_ptr = &masks;
    }

    const std::vector<double> analytic = ce_gradient(model, batch, masks_ptr);
    const std::size_t n_params = analytic.size();
    std::vector<std::size_t> coords(n_params);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    rng.shuffle(coords);
    const std::size_t n_check = std::min<std::size_t>(50, n_params);

    MlpModel probe = model;
    std::vector<Layer*> layer_ptrs;
    for (Layer& l : probe.layers) layer_ptrs.push_back(&l);
    auto param_at = [&](std::size_t flat) -> double& {
        for (Layer* l : layer_ptrs) {
            if (flat < l->w.size()) return l->w[flat];
            flat -= l->w.size();
            if (flat < l->b.size()) return l->b[flat];
            flat -= l->b.size();
        }
        throw InvalidParameterError("parameter index out of range");
    };

    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t k = 0; k < coords.size() && checked < n_check; ++k) {
        const std::size_t idx = coords[k];
        double& p = param_at(idx);
        const double saved = p;
        std::uint64_t gates_up = 0;
        std::uint64_t gates_down = 0;
        p = saved + epsilon;
        const double up = ce_loss_with_gates(probe, batch, masks_ptr, &gates_up);
        p = saved - epsilon;
        const double down = ce_loss_with_gates(probe, batch, masks_ptr, &gates_down);
        p = saved;
        // A ReLU gate flipped between the probes: the difference quotient
        // spans a kink, so it does not estimate the derivative here.
        if (gates_up != gates_down) continue;
        ++checked;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double err = std::fabs(analytic[idx] - numeric) / std::max(std::fabs(numeric), 1e-6);
        worst = std::max(worst, err);
    }
    return worst;
}

std::string model_to_json(const MlpModel& model) {
    nlohmann::ordered_json j;
    j["config"]["hidden_sizes"] = model.config.hidden_sizes;
    j["config"]["dropout_rate"] = model.config.dropout_rate;
    j["training_seed"] = model.training_seed;
    j["layers"] = nlohmann::ordered_json::array();
    for (const Layer& l : model.layers) {
        nlohmann::ordered_json jl;
        jl["in"] = l.in;
        jl["out"] = l.out;
        jl["w"] = l.w;
        jl["b"] = l.b;
        j["layers"].push_back(std::move(jl));
    }
    return j.dump();
}

MlpModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("model JSON: ") + e.what());
    }
    MlpModel model;
    try {
        j.at("config").at("hidden_sizes").get_to(model.config.hidden_sizes);
        j.at("config").at("dropout_rate").get_to(model.config.dropout_rate);
        j.at("training_seed").get_to(model.training_seed);
        for (const auto& jl : j.at("layers")) {
            Layer l;
            jl.at("in").get_to(l.in);
            jl.at("out").get_to(l.out);
            jl.at("w").get_to(l.w);
            jl.at("b").get_to(l.b);
            if (l.w.size() != l.in * l.out || l.b.size() != l.out) {
                throw SchemaViolationError("model JSON: layer shape mismatch");
            }
            model.layers.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("model JSON: ") + e.what());
    }
    model.config.validate();
    // Shape chain: 2 -> hidden... -> 2.
    std::size_t expect_in = 2;
    if (model.layers.size() != model.config.hidden_sizes.size() + 1) {
        throw SchemaViolationError("model JSON: layer count mismatch");
    }
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const std::size_t expect_out =
            li < model.config.hidden_sizes.size() ? model.config.hidden_sizes[li] : 2;
        if (model.layers[li].in != expect_in || model.layers[li].out != expect_out) {
            throw SchemaViolationError("model JSON: layer shape mismatch");
        }
        expect_in = expect_out;
    }
    return model;
}

const char* backbone_name(BackboneKind kind) {
    switch (kind) {
    case BackboneKind::softmax: return "softmax";
    case BackboneKind::deep_ensemble: return "deep_ensemble";
    case BackboneKind::mc_dropout: return "mc_dropout";
    }
    return "softmax";
}

BackboneKind parse_backbone(const std::string& name) {
    if (name == "softmax") return BackboneKind::softmax;
    if (name == "deep_ensemble") return BackboneKind::deep_ensemble;
    if (name == "mc_dropout") return BackboneKind::mc_dropout;
    throw InvalidParameterError("unknown backbone '" + name + "'");
}

void UqBackbone::validate() const {
    if (models.empty()) {
        throw InvalidParameterError("backbone needs at least one model");
    }
    if (kind != BackboneKind::deep_ensemble && models.size() != 1) {
        throw InvalidParameterError("only deep_ensemble carries several models");
    }
    if (kind == BackboneKind::mc_dropout && n_mc == 0) {
        throw InvalidParameterError("mc_dropout needs n_mc >= 1");
    }
}

PredictionRecord predict(const UqBackbone& backbone, const LabeledSample& sample) {
    backbone.validate();
    std::vector<ProbVector> members;
    std::vector<std::array<double, 2>> logits;
    switch (backbone.kind) {
    case BackboneKind::softmax: {
        ForwardResult r = forward(backbone.models[0], sample.x);
        members.push_back(r.probs);
        logits.push_back(r.logits);
        break;
    }
    case BackboneKind::deep_ensemble: {
        for (const MlpModel& model : backbone.models) {
            ForwardResult r = forward(model, sample.x);
            members.push_back(r.probs);
            logits.push_back(r.logits);
        }
        break;
    }
    case BackboneKind::mc_dropout: {
        const std::uint64_t sample_seed = derive_seed(backbone.inference_seed, sample.id);
        for (std::size_t pass = 0; pass < backbone.n_mc; ++pass) {
            Rng rng(derive_seed(sample_seed, static_cast<std::uint64_t>(pass)));
            ForwardResult r = forward(backbone.models[0], sample.x, &rng);
            members.push_back(r.probs);
            logits.push_back(r.logits);
        }
        break;
    }
    }
    return PredictionRecord::from_members(sample.id, std::move(members), std::move(logits));
}

std::vector<PredictionRecord> predict_all(const UqBackbone& backbone,
                                          const std::vector<LabeledSample>& samples) {
    std::vector<PredictionRecord> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(backbone, s));
    return out;
}

} // namespace uqscore
