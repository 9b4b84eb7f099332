#include "xling/crf.hpp"

#include <algorithm>
#include <cmath>

#include "xling/errors.hpp"

namespace xling::crf {

namespace {

constexpr double kMaskScore = -1e30;

void check_labels(const std::vector<int>& labels, const Lattice& lattice) {
  if (labels.size() != lattice.length()) throw ShapeError("label sequence length mismatch");
  for (int z : labels)
    if (z < 0 || static_cast<std::size_t>(z) >= lattice.num_labels())
      throw ValueError("label index out of range");
}

void check_lattice(const CrfParams& params, const Lattice& lattice) {
  if (lattice.length() == 0) throw ShapeError("empty lattice");
  if (lattice.num_labels() != params.num_labels() ||
      params.transitions.cols() != params.num_labels() ||
      params.start.size() != params.num_labels() || params.stop.size() != params.num_labels())
    throw ShapeError("lattice/parameter label count mismatch");
}

// Forward scores: alpha(t, k) = log sum over prefixes ending in k at t,
// including start and unaries up to t.
Matrix forward_scores(const CrfParams& params, const Lattice& lattice) {
  std::size_t n = lattice.length(), k = lattice.num_labels();
  Matrix alpha(n, k);
  Vec work(k);
  for (std::size_t y = 0; y < k; ++y) alpha(0, y) = params.start[y] + lattice.unary(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t p = 0; p < k; ++p) work[p] = alpha(t - 1, p) + params.transitions(p, y);
      alpha(t, y) = log_sum_exp(work.data(), k) + lattice.unary(t, y);
    }
  }
  return alpha;
}

// Backward scores: beta(t, k) = log sum over completions from label k at t,
// excluding unary(t) but including stop.
Matrix backward_scores(const CrfParams& params, const Lattice& lattice) {
  std::size_t n = lattice.length(), k = lattice.num_labels();
  Matrix beta(n, k);
  Vec work(k);
  for (std::size_t y = 0; y < k; ++y) beta(n - 1, y) = params.stop[y];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t nx = 0; nx < k; ++nx)
        work[nx] = params.transitions(y, nx) + lattice.unary(t + 1, nx) + beta(t + 1, nx);
      beta(t, y) = log_sum_exp(work.data(), k);
    }
  }
  return beta;
}

}  // namespace

CrfParams init_crf(std::size_t num_labels, std::size_t feature_dim, Rng& rng) {
  CrfParams p;
  double bound = std::sqrt(6.0 / static_cast<double>(num_labels + feature_dim));
  p.emission_proj = Matrix(num_labels, feature_dim);
  for (double& x : p.emission_proj.data()) x = rng.uniform(-bound, bound);
  p.transitions = Matrix(num_labels, num_labels);
  p.start.assign(num_labels, 0.0);
  p.stop.assign(num_labels, 0.0);
  return p;
}

Lattice project(const CrfParams& params, const std::vector<Vec>& features) {
  if (features.empty()) throw ShapeError("project: no features");
  Lattice lattice;
  lattice.unary = Matrix(features.size(), params.num_labels());
  for (std::size_t t = 0; t < features.size(); ++t) {
    if (features[t].size() != params.emission_proj.cols())
      throw ShapeError("project: feature width mismatch");
    for (std::size_t y = 0; y < params.num_labels(); ++y)
      lattice.unary(t, y) = dot(params.emission_proj.row(y), features[t].data(),
                                features[t].size());
  }
  return lattice;
}

double log_sum_exp(const double* xs, std::size_t n) {
  double m = xs[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, xs[i]);
  if (!std::isfinite(m)) return m;  // all -inf (or contains +inf)
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(xs[i] - m);
  return m + std::log(sum);
}

double sequence_score(const CrfParams& params, const Lattice& lattice,
                      const std::vector<int>& labels) {
  check_lattice(params, lattice);
  check_labels(labels, lattice);
  // Accumulation order mirrors the Viterbi recursion so the decoded score
  // reproduces this value bit for bit.
  auto z0 = static_cast<std::size_t>(labels[0]);
  double score = params.start[z0] + lattice.unary(0, z0);
  for (std::size_t t = 1; t < labels.size(); ++t) {
    auto prev = static_cast<std::size_t>(labels[t - 1]);
    auto cur = static_cast<std::size_t>(labels[t]);
    score = score + params.transitions(prev, cur) + lattice.unary(t, cur);
  }
  return score + params.stop[static_cast<std::size_t>(labels.back())];
}

double log_partition(const CrfParams& params, const Lattice& lattice) {
  check_lattice(params, lattice);
  std::size_t n = lattice.length(), k = lattice.num_labels();
  Matrix alpha = forward_scores(params, lattice);
  Vec final_scores(k);
  for (std::size_t y = 0; y < k; ++y) final_scores[y] = alpha(n - 1, y) + params.stop[y];
  return log_sum_exp(final_scores.data(), k);
}

double log_likelihood(const CrfParams& params, const Lattice& lattice,
                      const std::vector<int>& labels) {
  return sequence_score(params, lattice, labels) - log_partition(params, lattice);
}

Matrix marginals(const CrfParams& params, const Lattice& lattice) {
  check_lattice(params, lattice);
  std::size_t n = lattice.length(), k = lattice.num_labels();
  Matrix alpha = forward_scores(params, lattice);
  Matrix beta = backward_scores(params, lattice);
  Vec final_scores(k);
  for (std::size_t y = 0; y < k; ++y) final_scores[y] = alpha(n - 1, y) + params.stop[y];
  double log_z = log_sum_exp(final_scores.data(), k);

  Matrix out(n, k);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t y = 0; y < k; ++y) out(t, y) = std::exp(alpha(t, y) + beta(t, y) - log_z);
  return out;
}

ViterbiResult viterbi(const CrfParams& params, const Lattice& lattice) {
  check_lattice(params, lattice);
  std::size_t n = lattice.length(), k = lattice.num_labels();

  Matrix best(n, k);
  std::vector<std::vector<int>> backptr(n, std::vector<int>(k, 0));
  for (std::size_t y = 0; y < k; ++y) best(0, y) = params.start[y] + lattice.unary(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < k; ++y) {
      // Scanning predecessors in ascending order with a strict comparison
      // keeps the lowest index on ties.
      double top = best(t - 1, 0) + params.transitions(0, y);
      int arg = 0;
      for (std::size_t p = 1; p < k; ++p) {
        double cand = best(t - 1, p) + params.transitions(p, y);
        if (cand > top) {
          top = cand;
          arg = static_cast<int>(p);
        }
      }
      best(t, y) = top + lattice.unary(t, y);
      backptr[t][y] = arg;
    }
  }

  double top = best(n - 1, 0) + params.stop[0];
  int last = 0;
  for (std::size_t y = 1; y < k; ++y) {
    double cand = best(n - 1, y) + params.stop[y];
    if (cand > top) {
      top = cand;
      last = static_cast<int>(y);
    }
  }

  ViterbiResult result;
  result.score = top;
  result.labels.assign(n, 0);
  result.labels[n - 1] = last;
  for (std::size_t t = n - 1; t-- > 0;)
    result.labels[t] = backptr[t + 1][static_cast<std::size_t>(result.labels[t + 1])];
  return result;
}

CrfGradients crf_gradients(const CrfParams& params, const Lattice& lattice,
                           const std::vector<int>& labels) {
  check_lattice(params, lattice);
  check_labels(labels, lattice);
  std::size_t n = lattice.length(), k = lattice.num_labels();

  Matrix alpha = forward_scores(params, lattice);
  Matrix beta = backward_scores(params, lattice);
  Vec final_scores(k);
  for (std::size_t y = 0; y < k; ++y) final_scores[y] = alpha(n - 1, y) + params.stop[y];
  double log_z = log_sum_exp(final_scores.data(), k);

  CrfGradients g;
  g.transitions = Matrix(k, k);
  g.start.assign(k, 0.0);
  g.stop.assign(k, 0.0);
  g.unary = Matrix(n, k);

  // Unary, start, stop: one-hot gold counts minus posterior marginals.
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t y = 0; y < k; ++y)
      g.unary(t, y) = (static_cast<std::size_t>(labels[t]) == y ? 1.0 : 0.0) -
                      std::exp(alpha(t, y) + beta(t, y) - log_z);
  for (std::size_t y = 0; y < k; ++y) {
    g.start[y] = (static_cast<std::size_t>(labels[0]) == y ? 1.0 : 0.0) -
                 std::exp(alpha(0, y) + beta(0, y) - log_z);
    g.stop[y] = (static_cast<std::size_t>(labels[n - 1]) == y ? 1.0 : 0.0) -
                std::exp(alpha(n - 1, y) + beta(n - 1, y) - log_z);
  }

  // Transitions: gold pair counts minus pairwise posterior marginals.
  for (std::size_t t = 1; t < n; ++t) {
    g.transitions(static_cast<std::size_t>(labels[t - 1]), static_cast<std::size_t>(labels[t])) +=
        1.0;
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t y = 0; y < k; ++y)
        g.transitions(p, y) -= std::exp(alpha(t - 1, p) + params.transitions(p, y) +
                                        lattice.unary(t, y) + beta(t, y) - log_z);
  }
  return g;
}

ProjectionBackward project_backward(const CrfParams& params, const std::vector<Vec>& features,
                                    const Matrix& d_unary) {
  if (d_unary.rows() != features.size() || d_unary.cols() != params.num_labels())
    throw ShapeError("project_backward: gradient shape mismatch");
  ProjectionBackward out;
  out.emission_proj = Matrix(params.emission_proj.rows(), params.emission_proj.cols());
  out.features.assign(features.size(), Vec(params.emission_proj.cols(), 0.0));
  for (std::size_t t = 0; t < features.size(); ++t) {
    for (std::size_t y = 0; y < params.num_labels(); ++y) {
      double gu = d_unary(t, y);
      if (gu == 0.0) continue;
      double* proj_row = out.emission_proj.row(y);
      const double* w_row = params.emission_proj.row(y);
      for (std::size_t f = 0; f < features[t].size(); ++f) {
        proj_row[f] += gu * features[t][f];
        out.features[t][f] += gu * w_row[f];
      }
    }
  }
  return out;
}

CrfParams hard_mask(const CrfParams& params, const corpus::LabelScheme& scheme) {
  if (params.num_labels() != scheme.num_tags())
    throw ShapeError("hard_mask: scheme size mismatch");
  CrfParams masked = params;
  auto k = static_cast<int>(scheme.num_tags());
  for (int b = 0; b < k; ++b) {
    if (!scheme.is_inside(b)) continue;
    int etype = scheme.entity_type_of(b);
    masked.start[static_cast<std::size_t>(b)] = kMaskScore;
    for (int a = 0; a < k; ++a) {
      bool legal = (a == scheme.begin_tag(etype)) || (a == scheme.inside_tag(etype));
      if (!legal)
        masked.transitions(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = kMaskScore;
    }
  }
  return masked;
}

}  // namespace xling::crf
