#pragma once

#include <vector>

#include "xling/corpus.hpp"
#include "xling/matrix.hpp"
#include "xling/util.hpp"

namespace xling::crf {

// Linear-chain CRF: per-position unary scores (an affine projection of the
// encoder features), label-pair transition scores, and start/stop scores.
struct CrfParams {
  Matrix emission_proj;  // K x F
  Matrix transitions;    // K x K, (a, b) = score of label b following a
  Vec start;             // K
  Vec stop;              // K

  std::size_t num_labels() const { return transitions.rows(); }

  bool operator==(const CrfParams&) const = default;
};

// Zero transitions/start/stop, Glorot-uniform emission projection.
CrfParams init_crf(std::size_t num_labels, std::size_t feature_dim, Rng& rng);

struct Lattice {
  Matrix unary;  // N x K

  std::size_t length() const { return unary.rows(); }
  std::size_t num_labels() const { return unary.cols(); }
};

Lattice project(const CrfParams& params, const std::vector<Vec>& features);

double log_sum_exp(const double* xs, std::size_t n);

double sequence_score(const CrfParams& params, const Lattice& lattice,
                      const std::vector<int>& labels);

// log Z by the forward recursion in log space.
double log_partition(const CrfParams& params, const Lattice& lattice);

double log_likelihood(const CrfParams& params, const Lattice& lattice,
                      const std::vector<int>& labels);

// Posterior label probabilities per position (forward-backward).
Matrix marginals(const CrfParams& params, const Lattice& lattice);

struct ViterbiResult {
  std::vector<int> labels;
  double score;
};

// Max-score labeling; ties broken toward the lowest label index at every
// backtrack step. The returned score equals sequence_score of the labels.
ViterbiResult viterbi(const CrfParams& params, const Lattice& lattice);

struct CrfGradients {
  Matrix transitions;
  Vec start, stop;
  Matrix unary;  // gradient w.r.t. the lattice
};

// Gradient of log_likelihood: empirical counts minus expected counts.
CrfGradients crf_gradients(const CrfParams& params, const Lattice& lattice,
                           const std::vector<int>& labels);

struct ProjectionBackward {
  Matrix emission_proj;      // gradient w.r.t. the projection
  std::vector<Vec> features;  // gradient w.r.t. the input features
};

ProjectionBackward project_backward(const CrfParams& params, const std::vector<Vec>& features,
                                    const Matrix& d_unary);

// Copy of the parameters with IOB2-invalid moves (into I-T from anything
// other than B-T/I-T, and starting on I-T) forced to a large negative score.
CrfParams hard_mask(const CrfParams& params, const corpus::LabelScheme& scheme);

}  // namespace xling::crf
