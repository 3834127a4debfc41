#include "uqscore/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "uqscore/rng.hpp"
#include "uqscore/text.hpp"

namespace uqscore {

void MixtureSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidParameterError("sigma must be positive");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidParameterError("tau must be positive");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidParameterError("p must lie strictly inside (0,1)");
    }
    for (double v : {mu0[0], mu0[1], mu1[0], mu1[1]}) {
        if (!std::isfinite(v)) {
            throw InvalidParameterError("mixture centers must be finite");
        }
    }
}

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::calibration: return "calibration";
    }
    return "train";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    if (name == "calibration") return Split::calibration;
    throw InvalidParameterError("unknown split name '" + name + "'");
}

SampleSet Dataset::subset(Split tag) const {
    SampleSet out;
    out.split_tag = tag;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (splits[i] == tag) out.samples.push_back(samples[i]);
    }
    return out;
}

std::size_t Dataset::count(Split tag) const {
    std::size_t n = 0;
    for (Split s : splits) {
        if (s == tag) ++n;
    }
    return n;
}

MixtureSpec sample_spec(std::uint64_t seed, double tau, double sigma, double p) {
    MixtureSpec probe;
    probe.sigma = sigma;
    probe.p = p;
    probe.tau = tau;
    probe.validate(); // center values come next, scalars must already be sane

    Rng rng(derive_seed(seed, "mixture-centers"));
    MixtureSpec spec = probe;
    spec.mu0 = {tau * rng.normal(), tau * rng.normal()};
    spec.mu1 = {tau * rng.normal(), tau * rng.normal()};
    return spec;
}

namespace {

std::string sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%06zu", index);
    return std::string(buf);
}

} // namespace

std::vector<LabeledSample> sample_points(const MixtureSpec& spec, std::size_t n,
                                         std::uint64_t seed, bool stratify) {
    spec.validate();
    if (n < 2) {
        throw InvalidParameterError("need at least 2 samples");
    }

    std::vector<int> labels(n, 0);
    Rng rng(derive_seed(seed, "mixture-points"));
    if (stratify) {
        const auto n1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.p));
        std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n1), 1);
        rng.shuffle(labels);
    } else {
        for (std::size_t i = 0; i < n; ++i) labels[i] = rng.bernoulli(spec.p) ? 1 : 0;
    }

    std::vector<LabeledSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = labels[i] == 1 ? spec.mu1 : spec.mu0;
        out[i].id = sample_id(i);
        out[i].y = labels[i];
        out[i].x = {mu[0] + spec.sigma * rng.normal(), mu[1] + spec.sigma * rng.normal()};
    }
    return out;
}

Dataset split_dataset(std::vector<LabeledSample> samples, std::size_t train_n,
                      bool stratify, double calib_fraction) {
    const std::size_t n = samples.size();
    if (train_n == 0 || train_n >= n) {
        throw InvalidParameterError("train size must leave a non-empty test split");
    }
    if (!(calib_fraction >= 0.0 && calib_fraction < 1.0)) {
        throw InvalidParameterError("calibration fraction must lie in [0,1)");
    }

    Dataset ds;
    ds.samples = std::move(samples);
    ds.splits.assign(n, Split::test);

    if (stratify) {
        std::array<std::size_t, 2> total{0, 0};
        for (const auto& s : ds.samples) ++total[static_cast<std::size_t>(s.y)];
        // Largest-remainder allocation of the train quota across classes.
        const double want1 = static_cast<double>(train_n) * static_cast<double>(total[1]) /
                             static_cast<double>(n);
        std::array<std::size_t, 2> train_quota{};
        train_quota[1] = std::min<std::size_t>(total[1], static_cast<std::size_t>(std::llround(want1)));
        train_quota[0] = std::min<std::size_t>(total[0], train_n - train_quota[1]);
        if (train_quota[0] + train_quota[1] < train_n) {
            train_quota[1] = train_n - train_quota[0];
        }

        std::array<std::size_t, 2> taken{0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            auto y = static_cast<std::size_t>(ds.samples[i].y);
            if (taken[y] < train_quota[y]) {
                ds.splits[i] = Split::train;
                ++taken[y];
            }
        }

        if (calib_fraction > 0.0) {
            std::array<std::size_t, 2> test_total{total[0] - train_quota[0], total[1] - train_quota[1]};
            std::array<std::size_t, 2> calib_quota{
                static_cast<std::size_t>(std::llround(calib_fraction * static_cast<double>(test_total[0]))),
                static_cast<std::size_t>(std::llround(calib_fraction * static_cast<double>(test_total[1])))};
            std::array<std::size_t, 2> seen{0, 0};
            for (std::size_t i = 0; i < n; ++i) {
                if (ds.splits[i] != Split::test) continue;
                auto y = static_cast<std::size_t>(ds.samples[i].y);
                if (seen[y] < calib_quota[y]) {
                    ds.splits[i] = Split::calibration;
                    ++seen[y];
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < train_n; ++i) ds.splits[i] = Split::train;
        if (calib_fraction > 0.0) {
            const std::size_t test_n = n - train_n;
            const auto calib_n =
                static_cast<std::size_t>(std::llround(calib_fraction * static_cast<double>(test_n)));
            for (std::size_t i = train_n; i < train_n + calib_n; ++i) {
                ds.splits[i] = Split::calibration;
            }
        }
    }
    return ds;
}

ProbVector posterior(const MixtureSpec& spec, const std::array<double, 2>& x) {
    spec.validate();
    const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
    const double d0 = (x[0] - spec.mu0[0]) * (x[0] - spec.mu0[0]) +
                      (x[1] - spec.mu0[1]) * (x[1] - spec.mu0[1]);
    const double d1 = (x[0] - spec.mu1[0]) * (x[0] - spec.mu1[0]) +
                      (x[1] - spec.mu1[1]) * (x[1] - spec.mu1[1]);
    // Log odds of label 1; the Gaussian normalizers cancel.
    const double lam = std::log(spec.p / (1.0 - spec.p)) + (d0 - d1) * inv2s2;
    double p1;
    if (lam >= 0.0) {
        p1 = 1.0 / (1.0 + std::exp(-lam));
    } else {
        const double e = std::exp(lam);
        p1 = e / (1.0 + e);
    }
    return ProbVector::checked(1.0 - p1, p1);
}

int bayes_label(const MixtureSpec& spec, const std::array<double, 2>& x) {
    return posterior(spec, x).argmax();
}

std::vector<OracleAnnotation> annotate(const MixtureSpec& spec,
                                       const std::vector<LabeledSample>& samples,
                                       const std::vector<PredictionRecord>& predictions) {
    std::unordered_map<std::string, const LabeledSample*> by_id;
    by_id.reserve(samples.size());
    for (const auto& s : samples) by_id[s.id] = &s;

    std::string missing;
    for (const auto& pred : predictions) {
        if (by_id.find(pred.sample_id()) == by_id.end()) {
            if (!missing.empty()) missing += ", ";
            missing += pred.sample_id();
        }
    }
    if (!missing.empty()) {
        throw JoinFailureError("predictions without a matching sample: " + missing);
    }

    std::vector<OracleAnnotation> out;
    out.reserve(predictions.size());
    for (const auto& pred : predictions) {
        const LabeledSample& s = *by_id[pred.sample_id()];
        OracleAnnotation a;
        a.sample_id = s.id;
        a.posterior = posterior(spec, s.x);
        a.bayes_label = a.posterior.argmax();
        a.phi = 1.0 - a.posterior[pred.y_hat()];
        a.varphi = varphi_of(pred.mean_prob(), a.bayes_label);
        a.delta = gap_delta(pred.mean_prob(), s.y);
        a.mis = mis_indicator(s.y, pred.y_hat());
        a.bayes_agree = pred.y_hat() == a.bayes_label ? 1 : 0;
        out.push_back(a);
    }
    return out;
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
    out << "id,x1,x2,y,split\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        out << s.id << ',' << fmt_g17(s.x[0]) << ',' << fmt_g17(s.x[1]) << ',' << s.y << ','
            << split_name(ds.splits[i]) << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in) {
    Dataset ds;
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaViolationError("dataset CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,x1,x2,y,split") {
        throw SchemaViolationError("line 1: expected header id,x1,x2,y,split");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": expected 5 fields");
        }
        LabeledSample s;
        s.id = fields[0];
        try {
            s.x[0] = std::stod(fields[1]);
            s.x[1] = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": bad coordinate");
        }
        if (fields[3] == "0") {
            s.y = 0;
        } else if (fields[3] == "1") {
            s.y = 1;
        } else {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": label must be 0 or 1");
        }
        Split tag;
        try {
            tag = parse_split(fields[4]);
        } catch (const Error&) {
            throw SchemaViolationError("line " + std::to_string(lineno) + ": bad split name");
        }
        ds.samples.push_back(std::move(s));
        ds.splits.push_back(tag);
    }
    return ds;
}

std::string mixture_spec_to_json(const MixtureSpec& spec) {
    nlohmann::ordered_json j;
    j["mu0"] = spec.mu0;
    j["mu1"] = spec.mu1;
    j["sigma"] = spec.sigma;
    j["p"] = spec.p;
    j["tau"] = spec.tau;
    return j.dump();
}

MixtureSpec mixture_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("mixture spec JSON: ") + e.what());
    }
    MixtureSpec spec;
    try {
        j.at("mu0").get_to(spec.mu0);
        j.at("mu1").get_to(spec.mu1);
        j.at("sigma").get_to(spec.sigma);
        j.at("p").get_to(spec.p);
        j.at("tau").get_to(spec.tau);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolationError(std::string("mixture spec JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

} // namespace uqscore
