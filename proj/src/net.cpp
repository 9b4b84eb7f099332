#include "xling/net.hpp"

#include <algorithm>
#include <cmath>

#include "xling/errors.hpp"

namespace xling::net {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return m;
}

struct StepCache {
  Vec z;  // [h_prev, x]
  Vec f, i, cand, o;
  Vec c, tanh_c;
  Vec c_prev;
  Vec h;
};

StepCache lstm_step(const LstmParams& p, const Vec& x, const LstmState& prev) {
  std::size_t h = p.hidden;
  StepCache cache;
  cache.z.reserve(h + p.input);
  cache.z.insert(cache.z.end(), prev.h.begin(), prev.h.end());
  cache.z.insert(cache.z.end(), x.begin(), x.end());
  cache.c_prev = prev.c;

  cache.f = matvec(p.w_f, cache.z);
  cache.i = matvec(p.w_i, cache.z);
  cache.cand = matvec(p.w_c, cache.z);
  cache.o = matvec(p.w_o, cache.z);
  cache.c.resize(h);
  cache.tanh_c.resize(h);
  cache.h.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    cache.f[j] = sigmoid(cache.f[j] + p.b_f[j]);
    cache.i[j] = sigmoid(cache.i[j] + p.b_i[j]);
    cache.cand[j] = std::tanh(cache.cand[j] + p.b_c[j]);
    cache.o[j] = sigmoid(cache.o[j] + p.b_o[j]);
    cache.c[j] = cache.f[j] * prev.c[j] + cache.i[j] * cache.cand[j];
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = cache.o[j] * cache.tanh_c[j];
  }
  return cache;
}

void check_shapes(const LstmParams& p, const Vec& x, const LstmState& prev) {
  std::size_t cols = p.hidden + p.input;
  if (x.size() != p.input || prev.h.size() != p.hidden || prev.c.size() != p.hidden ||
      p.w_f.rows() != p.hidden || p.w_f.cols() != cols || p.w_i.rows() != p.hidden ||
      p.w_i.cols() != cols || p.w_c.rows() != p.hidden || p.w_c.cols() != cols ||
      p.w_o.rows() != p.hidden || p.w_o.cols() != cols || p.b_f.size() != p.hidden ||
      p.b_i.size() != p.hidden || p.b_c.size() != p.hidden || p.b_o.size() != p.hidden)
    throw ShapeError("lstm_cell: inconsistent shapes");
}

LstmGradients zero_grads(const LstmParams& p) {
  LstmGradients g;
  std::size_t cols = p.hidden + p.input;
  g.w_f = Matrix(p.hidden, cols);
  g.w_i = Matrix(p.hidden, cols);
  g.w_c = Matrix(p.hidden, cols);
  g.w_o = Matrix(p.hidden, cols);
  g.b_f.assign(p.hidden, 0.0);
  g.b_i.assign(p.hidden, 0.0);
  g.b_c.assign(p.hidden, 0.0);
  g.b_o.assign(p.hidden, 0.0);
  return g;
}

// Runs one direction over the given index order and backpropagates through
// it. `upstream[t]` is the gradient on that direction's hidden state at
// sequence position order[t]. Gradients on the inputs are accumulated into
// dx (indexed by sequence position).
void run_direction_backward(const LstmParams& p, const std::vector<Vec>& xs,
                            const std::vector<std::size_t>& order,
                            const std::vector<const double*>& upstream, LstmGradients& grads,
                            std::vector<Vec>& dx) {
  std::size_t h = p.hidden;
  std::vector<StepCache> caches;
  caches.reserve(order.size());
  LstmState state{Vec(h, 0.0), Vec(h, 0.0)};
  for (std::size_t t : order) {
    StepCache cache = lstm_step(p, xs[t], state);
    state.h = cache.h;
    state.c = cache.c;
    caches.push_back(std::move(cache));
  }

  Vec dh_carry(h, 0.0);
  Vec dc_carry(h, 0.0);
  Vec da_f(h), da_i(h), da_c(h), da_o(h);
  for (std::size_t step = order.size(); step-- > 0;) {
    const StepCache& cache = caches[step];
    for (std::size_t j = 0; j < h; ++j) {
      double dh = dh_carry[j] + upstream[step][j];
      double dout = dh * cache.tanh_c[j];
      double dc = dc_carry[j] + dh * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
      double df = dc * cache.c_prev[j];
      double di = dc * cache.cand[j];
      double dcand = dc * cache.i[j];
      dc_carry[j] = dc * cache.f[j];
      da_f[j] = df * cache.f[j] * (1.0 - cache.f[j]);
      da_i[j] = di * cache.i[j] * (1.0 - cache.i[j]);
      da_c[j] = dcand * (1.0 - cache.cand[j] * cache.cand[j]);
      da_o[j] = dout * cache.o[j] * (1.0 - cache.o[j]);
    }

    std::size_t cols = h + p.input;
    Vec dz(cols, 0.0);
    auto accumulate = [&](Matrix& dw, Vec& db, const Vec& da, const Matrix& w) {
      for (std::size_t j = 0; j < h; ++j) {
        double a = da[j];
        db[j] += a;
        if (a == 0.0) continue;
        double* dwrow = dw.row(j);
        const double* wrow = w.row(j);
        for (std::size_t cidx = 0; cidx < cols; ++cidx) {
          dwrow[cidx] += a * cache.z[cidx];
          dz[cidx] += a * wrow[cidx];
        }
      }
    };
    accumulate(grads.w_f, grads.b_f, da_f, p.w_f);
    accumulate(grads.w_i, grads.b_i, da_i, p.w_i);
    accumulate(grads.w_c, grads.b_c, da_c, p.w_c);
    accumulate(grads.w_o, grads.b_o, da_o, p.w_o);

    std::copy(dz.begin(), dz.begin() + static_cast<long>(h), dh_carry.begin());
    Vec& dxt = dx[order[step]];
    for (std::size_t cidx = 0; cidx < p.input; ++cidx) dxt[cidx] += dz[h + cidx];
  }
}

}  // namespace

LstmParams init_lstm(std::size_t hidden, std::size_t input, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  p.input = input;
  std::size_t cols = hidden + input;
  p.w_f = glorot(hidden, cols, rng);
  p.w_i = glorot(hidden, cols, rng);
  p.w_c = glorot(hidden, cols, rng);
  p.w_o = glorot(hidden, cols, rng);
  p.b_f.assign(hidden, 1.0);  // open forget gates help early gradient flow
  p.b_i.assign(hidden, 0.0);
  p.b_c.assign(hidden, 0.0);
  p.b_o.assign(hidden, 0.0);
  return p;
}

LstmState lstm_cell(const LstmParams& params, const Vec& x, const LstmState& prev) {
  check_shapes(params, x, prev);
  StepCache cache = lstm_step(params, x, prev);
  return {std::move(cache.h), std::move(cache.c)};
}

BilstmParams init_bilstm(std::size_t hidden, std::size_t input, Rng& rng) {
  BilstmParams p;
  p.forward = init_lstm(hidden, input, rng);
  p.backward = init_lstm(hidden, input, rng);
  return p;
}

std::vector<Vec> bilstm_forward(const BilstmParams& params, const std::vector<Vec>& xs) {
  if (xs.empty()) throw ValueError("bilstm_forward: empty sequence");
  if (params.forward.hidden != params.backward.hidden ||
      params.forward.input != params.backward.input)
    throw ShapeError("bilstm_forward: direction shapes differ");
  std::size_t n = xs.size();
  std::size_t h = params.forward.hidden;

  std::vector<Vec> out(n, Vec(2 * h, 0.0));
  LstmState state{Vec(h, 0.0), Vec(h, 0.0)};
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_cell(params.forward, xs[t], state);
    std::copy(state.h.begin(), state.h.end(), out[t].begin());
  }
  state = LstmState{Vec(h, 0.0), Vec(h, 0.0)};
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_cell(params.backward, xs[t], state);
    std::copy(state.h.begin(), state.h.end(), out[t].begin() + static_cast<long>(h));
  }
  return out;
}

BilstmBackwardResult bilstm_backward(const BilstmParams& params, const std::vector<Vec>& xs,
                                     const std::vector<Vec>& upstream) {
  if (xs.empty()) throw ValueError("bilstm_backward: empty sequence");
  if (upstream.size() != xs.size()) throw ShapeError("bilstm_backward: upstream length mismatch");
  std::size_t n = xs.size();
  std::size_t h = params.forward.hidden;
  for (const Vec& u : upstream)
    if (u.size() != 2 * h) throw ShapeError("bilstm_backward: upstream width mismatch");

  BilstmBackwardResult result;
  result.params.forward = zero_grads(params.forward);
  result.params.backward = zero_grads(params.backward);
  result.inputs.assign(n, Vec(params.forward.input, 0.0));

  std::vector<std::size_t> fwd_order(n), bwd_order(n);
  std::vector<const double*> fwd_up(n), bwd_up(n);
  for (std::size_t t = 0; t < n; ++t) {
    fwd_order[t] = t;
    bwd_order[t] = n - 1 - t;
    fwd_up[t] = upstream[t].data();
    bwd_up[t] = upstream[n - 1 - t].data() + h;
  }
  run_direction_backward(params.forward, xs, fwd_order, fwd_up, result.params.forward,
                         result.inputs);
  run_direction_backward(params.backward, xs, bwd_order, bwd_up, result.params.backward,
                         result.inputs);
  return result;
}

void add_scaled(LstmParams& params, const LstmGradients& grads, double scale) {
  auto add_m = [scale](Matrix& dst, const Matrix& src) {
    for (std::size_t i = 0; i < dst.data().size(); ++i) dst.data()[i] += scale * src.data()[i];
  };
  auto add_v = [scale](Vec& dst, const Vec& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  };
  add_m(params.w_f, grads.w_f);
  add_m(params.w_i, grads.w_i);
  add_m(params.w_c, grads.w_c);
  add_m(params.w_o, grads.w_o);
  add_v(params.b_f, grads.b_f);
  add_v(params.b_i, grads.b_i);
  add_v(params.b_c, grads.b_c);
  add_v(params.b_o, grads.b_o);
}

double grad_sq_norm(const LstmGradients& grads) {
  double s = 0.0;
  for (const Matrix* m : {&grads.w_f, &grads.w_i, &grads.w_c, &grads.w_o})
    for (double x : m->data()) s += x * x;
  for (const Vec* v : {&grads.b_f, &grads.b_i, &grads.b_c, &grads.b_o})
    for (double x : *v) s += x * x;
  return s;
}

void scale_grads(LstmGradients& grads, double factor) {
  for (Matrix* m : {&grads.w_f, &grads.w_i, &grads.w_c, &grads.w_o})
    for (double& x : m->data()) x *= factor;
  for (Vec* v : {&grads.b_f, &grads.b_i, &grads.b_c, &grads.b_o})
    for (double& x : *v) x *= factor;
}

}  // namespace xling::net
