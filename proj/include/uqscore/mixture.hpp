#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uqscore/domain.hpp"

namespace uqscore {

// Two-component isotropic Gaussian mixture in the plane. Because the
// generative law is known in closed form, the exact posterior of the label
// given a point is available, which is what makes the reference
// uncertainty values computable at all.
struct MixtureSpec {
    std::array<double, 2> mu0{0.0, 0.0};
    std::array<double, 2> mu1{0.0, 0.0};
    double sigma = 1.0; // shared isotropic standard deviation
    double p = 0.5;     // P(Y = 1)
    double tau = 1.0;   // standard deviation used to draw the centers

    void validate() const;
};

enum class Split { train, test, calibration };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct SampleSet {
    std::vector<LabeledSample> samples;
    Split split_tag = Split::train;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    std::vector<Split> splits; // parallel to samples

    SampleSet subset(Split tag) const;
    std::size_t count(Split tag) const;
};

// Draws the two centers from N(0, tau^2 I).
MixtureSpec sample_spec(std::uint64_t seed, double tau, double sigma = 1.0, double p = 0.5);

// Draws n labeled points. With stratify the label counts are forced to
// floor(n*p) ones / ceil(n*(1-p)) zeros in a shuffled order; otherwise each
// label is an independent Bernoulli draw.
std::vector<LabeledSample> sample_points(const MixtureSpec& spec, std::size_t n,
                                         std::uint64_t seed, bool stratify);

// Assigns split tags in place. With stratify the per-class proportions of
// the train split match the pool. calib_fraction is the share of the test
// split re-tagged as calibration (0 disables it).
Dataset split_dataset(std::vector<LabeledSample> samples, std::size_t train_n,
                      bool stratify, double calib_fraction = 0.0);

// Exact posterior P(Y = . | X = x), evaluated in log space so that widely
// separated centers cannot overflow.
ProbVector posterior(const MixtureSpec& spec, const std::array<double, 2>& x);

// argmax of the posterior; ties resolve to label 0.
int bayes_label(const MixtureSpec& spec, const std::array<double, 2>& x);

// Joins predictions to samples by id and fills in the oracle columns.
// Every prediction must match exactly one sample; offenders are listed in
// the error message.
std::vector<OracleAnnotation> annotate(const MixtureSpec& spec,
                                       const std::vector<LabeledSample>& samples,
                                       const std::vector<PredictionRecord>& predictions);

// CSV round trip, header `id,x1,x2,y,split`, 17 significant digits.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

// Mixture spec JSON round trip.
std::string mixture_spec_to_json(const MixtureSpec& spec);
MixtureSpec mixture_spec_from_json(const std::string& text);

} // namespace uqscore
