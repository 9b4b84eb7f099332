#pragma once

#include <vector>

#include "xling/matrix.hpp"
#include "xling/util.hpp"

namespace xling::net {

// Gate weights act on the concatenation [h_prev, x]; each is h x (h + d).
struct LstmParams {
  std::size_t hidden = 0;
  std::size_t input = 0;
  Matrix w_f, w_i, w_c, w_o;
  Vec b_f, b_i, b_c, b_o;

  bool operator==(const LstmParams&) const = default;
};

struct LstmState {
  Vec h;
  Vec c;
};

// Glorot-uniform weights, forget-gate bias 1, other biases 0.
LstmParams init_lstm(std::size_t hidden, std::size_t input, Rng& rng);

// f,i,o = sigmoid(W [h,x] + b); cand = tanh(W_c [h,x] + b_c);
// c' = f*c + i*cand; h' = o * tanh(c').
LstmState lstm_cell(const LstmParams& params, const Vec& x, const LstmState& prev);

struct BilstmParams {
  LstmParams forward;
  LstmParams backward;

  bool operator==(const BilstmParams&) const = default;
};

BilstmParams init_bilstm(std::size_t hidden, std::size_t input, Rng& rng);

// Per position: concat of the left-to-right hidden state over x_1..x_t and
// the right-to-left hidden state over x_N..x_t. Initial states are zero.
std::vector<Vec> bilstm_forward(const BilstmParams& params, const std::vector<Vec>& xs);

struct LstmGradients {
  Matrix w_f, w_i, w_c, w_o;
  Vec b_f, b_i, b_c, b_o;
};

struct BilstmGradients {
  LstmGradients forward;
  LstmGradients backward;
};

struct BilstmBackwardResult {
  BilstmGradients params;
  std::vector<Vec> inputs;  // gradient w.r.t. each x_t
};

// Exact reverse-mode gradients of bilstm_forward under upstream gradients
// on its outputs (one 2h vector per position).
BilstmBackwardResult bilstm_backward(const BilstmParams& params, const std::vector<Vec>& xs,
                                     const std::vector<Vec>& upstream);

void add_scaled(LstmParams& params, const LstmGradients& grads, double scale);
double grad_sq_norm(const LstmGradients& grads);
void scale_grads(LstmGradients& grads, double factor);

}  // namespace xling::net
