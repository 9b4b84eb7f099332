#include "xling/align.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "xling/errors.hpp"
#include "xling/util.hpp"

namespace xling::align {

std::vector<std::pair<std::string, std::string>> parse_dictionary(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t pos = line.find('\t');
    if (pos == std::string::npos)
      throw ParseError("expected \"target<TAB>source\"", lineno);
    std::string target = line.substr(0, pos);
    std::string source = line.substr(pos + 1);
    if (target.empty() || source.empty()) throw ParseError("empty token in pair", lineno);
    pairs.emplace_back(std::move(target), std::move(source));
  }
  return pairs;
}

DictionaryPairs build_dictionary(
    const std::vector<std::pair<std::string, std::string>>& raw_pairs,
    const embed::EmbeddingStore& target, const embed::EmbeddingStore& source) {
  if (target.dim() != source.dim())
    throw ShapeError("target and source stores have different dimensions");
  DictionaryPairs dict;
  auto unit = [](Vec v) {
    double n = norm2(v);
    if (n > 0.0)
      for (double& x : v) x /= n;
    return v;
  };
  for (const auto& [t, s] : raw_pairs) {
    int ti = target.index_of(t);
    int si = source.index_of(s);
    if (ti < 0 || si < 0) {
      ++dict.dropped;
      continue;
    }
    dict.x.append_row(unit(target.row_vec(static_cast<std::size_t>(ti))));
    dict.y.append_row(unit(source.row_vec(static_cast<std::size_t>(si))));
    dict.pairs.emplace_back(t, s);
  }
  return dict;
}

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 64;

// Orthonormal fill-in for columns whose singular value vanished: take the
// first standard basis vector whose residual against the columns fixed so
// far stays large, and normalize the residual.
Vec complete_column(const std::vector<Vec>& fixed, std::size_t d) {
  for (std::size_t cand = 0; cand < d; ++cand) {
    Vec v(d, 0.0);
    v[cand] = 1.0;
    for (const auto& u : fixed) axpy(-dot(u, v), u, v);
    double n = norm2(v);
    if (n > 0.5) {
      for (double& x : v) x /= n;
      return v;
    }
  }
  throw Error("svd: failed to complete orthonormal basis");
}

}  // namespace

SvdResult svd(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("svd: matrix must be square");
  if (m.rows() == 0) throw ShapeError("svd: empty matrix");
  if (!all_finite(m)) throw ValueError("svd: non-finite entries");
  std::size_t d = m.rows();

  // Work on the transpose so columns of A and V are contiguous rows here.
  Matrix at = transpose(m);
  Matrix vt_work = Matrix::identity(d);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double* ap = at.row(p);
        double* aq = at.row(q);
        double alpha = dot(ap, ap, d);
        double beta = dot(aq, aq, d);
        double gamma = dot(ap, aq, d);
        if (std::fabs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
        converged = false;
        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        double* vp = vt_work.row(p);
        double* vq = vt_work.row(q);
        for (std::size_t i = 0; i < d; ++i) {
          double api = ap[i], aqi = aq[i];
          ap[i] = c * api - s * aqi;
          aq[i] = s * api + c * aqi;
          double vpi = vp[i], vqi = vq[i];
          vp[i] = c * vpi - s * vqi;
          vq[i] = s * vpi + c * vqi;
        }
      }
    }
    if (converged) break;
  }

  Vec sigma(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) sigma[j] = std::sqrt(dot(at.row(j), at.row(j), d));

  // Descending order, stable for equal values.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  double rank_eps = sigma[order[0]] * 1e-13;
  SvdResult result;
  result.u = Matrix(d, d);
  result.vt = Matrix(d, d);
  result.s.resize(d);

  std::vector<Vec> u_cols;
  for (std::size_t j = 0; j < d; ++j) {
    std::size_t src = order[j];
    result.s[j] = sigma[src];
    Vec ucol(d);
    if (sigma[src] > rank_eps && sigma[src] > 0.0) {
      for (std::size_t i = 0; i < d; ++i) ucol[i] = at(src, i) / sigma[src];
    } else {
      ucol = complete_column(u_cols, d);
    }

    // Sign convention: largest-magnitude entry of each U column positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::fabs(ucol[i]) > std::fabs(ucol[arg])) arg = i;
    double flip = ucol[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      result.u(i, j) = flip * ucol[i];
      result.vt(j, i) = flip * vt_work(src, i);
    }
    for (double& x : ucol) x *= flip;
    u_cols.push_back(std::move(ucol));
  }
  return result;
}

AlignmentMap fit_orthogonal(const DictionaryPairs& dict) {
  if (dict.x.rows() == 0) throw EmptyDictionaryError("no dictionary pairs left after filtering");
  Matrix m = matmul(transpose(dict.y), dict.x);  // d x d
  SvdResult f = svd(m);

  AlignmentMap map;
  map.u = f.u;
  map.v = transpose(f.vt);
  map.singular_values = f.s;
  map.w = matmul(f.u, f.vt);
  map.diagnostics.method = "svd";
  map.diagnostics.pairs_used = dict.x.rows();
  map.diagnostics.pairs_dropped = dict.dropped;
  map.diagnostics.squared_loss = squared_loss(map.w, dict);
  map.diagnostics.objective = procrustes_objective(map.w, dict);
  for (double sv : f.s)
    if (sv < 1e-10) ++map.diagnostics.near_zero_singular;
  return map;
}

AlignmentMap fit_sgd(const DictionaryPairs& dict, double lr, int epochs, std::uint64_t seed) {
  if (dict.x.rows() == 0) throw EmptyDictionaryError("no dictionary pairs left after filtering");
  if (lr <= 0.0) throw ValueError("learning rate must be positive");
  std::size_t n = dict.x.rows();
  std::size_t d = dict.x.cols();

  Rng rng(seed);
  double bound = std::sqrt(3.0 / static_cast<double>(d));
  Matrix w(d, d);
  for (double& x : w.data()) x = rng.uniform(-bound, bound);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t i : order) {
      Vec x = dict.x.row_vec(i);
      Vec residual = matvec(w, x);
      for (std::size_t r = 0; r < d; ++r) residual[r] -= dict.y(i, r);
      epoch_loss += dot(residual, residual);
      for (std::size_t r = 0; r < d; ++r) {
        double g = 2.0 * lr * residual[r];
        if (g == 0.0) continue;
        double* wrow = w.row(r);
        for (std::size_t c = 0; c < d; ++c) wrow[c] -= g * x[c];
      }
    }
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("least-squares fit diverged", epoch);
  }

  AlignmentMap map;
  map.w = std::move(w);
  map.diagnostics.method = "sgd";
  map.diagnostics.pairs_used = n;
  map.diagnostics.pairs_dropped = dict.dropped;
  map.diagnostics.squared_loss = squared_loss(map.w, dict);
  map.diagnostics.objective = procrustes_objective(map.w, dict);
  return map;
}

Vec apply(const AlignmentMap& map, const Vec& v) {
  if (v.size() != map.w.cols()) throw ShapeError("apply: dimension mismatch");
  return matvec(map.w, v);
}

Vec apply_inverse(const AlignmentMap& map, const Vec& v) {
  if (v.size() != map.w.rows()) throw ShapeError("apply_inverse: dimension mismatch");
  return matvec_t(map.w, v);
}

double orthogonality_error(const AlignmentMap& map) {
  Matrix g = matmul(transpose(map.w), map.w);
  return max_abs_diff(g, Matrix::identity(g.rows()));
}

double procrustes_objective(const Matrix& w, const DictionaryPairs& dict) {
  double obj = 0.0;
  for (std::size_t i = 0; i < dict.x.rows(); ++i) {
    Vec wx = matvec(w, dict.x.row_vec(i));
    obj += dot(dict.y.row(i), wx.data(), wx.size());
  }
  return obj;
}

double squared_loss(const Matrix& w, const DictionaryPairs& dict) {
  double loss = 0.0;
  for (std::size_t i = 0; i < dict.x.rows(); ++i) {
    Vec wx = matvec(w, dict.x.row_vec(i));
    for (std::size_t r = 0; r < wx.size(); ++r) {
      double e = wx[r] - dict.y(i, r);
      loss += e * e;
    }
  }
  return loss;
}

double translation_precision(const AlignmentMap& map,
                             const std::vector<std::pair<std::string, std::string>>& test_pairs,
                             const embed::EmbeddingStore& target,
                             const embed::EmbeddingStore& source, std::size_t k) {
  if (test_pairs.empty()) throw ValueError("empty translation test set");
  std::size_t hits = 0;
  for (const auto& [t, s] : test_pairs) {
    Vec mapped = apply(map, embed::lookup(target, t));
    for (const auto& [token, cos] : embed::nearest(source, mapped, k)) {
      (void)cos;
      if (token == s) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(test_pairs.size());
}

void save_map(const AlignmentMap& map, std::ostream& out) {
  std::size_t d = map.w.rows();
  out << "xling-align v1 " << d << '\n';
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = map.w.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      if (c > 0) out << ' ';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

AlignmentMap load_map(std::istream& in, std::ostream* warnings) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto fields = split(line, ' ');
  std::size_t d = 0;
  if (fields.size() != 3 || fields[0] != "xling-align" || !parse_size(fields[2], d) || d == 0)
    throw VersionError("expected header \"xling-align v1 <d>\"");
  if (fields[1] != "v1") throw VersionError("unsupported map version '" + std::string(fields[1]) + "'");

  AlignmentMap map;
  map.w = Matrix(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    if (!std::getline(in, line)) throw ParseError("truncated map file", r + 2);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto values = split(line, ' ');
    if (values.size() != d) throw ParseError("expected " + std::to_string(d) + " values", r + 2);
    for (std::size_t c = 0; c < d; ++c) {
      if (!parse_double(values[c], map.w(r, c)))
        throw ParseError("bad number '" + std::string(values[c]) + "'", r + 2);
    }
  }
  map.diagnostics.method = "loaded";
  double err = orthogonality_error(map);
  if (err > 1e-6 && warnings != nullptr)
    *warnings << "warning: alignment map is not orthogonal (max |W^T W - I| = "
              << format_double(err) << ")\n";
  return map;
}

}  // namespace xling::align
