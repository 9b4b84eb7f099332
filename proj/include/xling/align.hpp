#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xling/embed.hpp"
#include "xling/matrix.hpp"

namespace xling::align {

// Paired rows of target-language (x) and source-language (y) vectors for
// the words of a bilingual dictionary, unit-normalized, OOV pairs dropped.
struct DictionaryPairs {
  Matrix x;  // n x d, target
  Matrix y;  // n x d, source
  std::vector<std::pair<std::string, std::string>> pairs;  // (target, source) kept
  std::size_t dropped = 0;
};

// Lines "target<TAB>source"; '#' comment lines and blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_dictionary(std::istream& in);

DictionaryPairs build_dictionary(
    const std::vector<std::pair<std::string, std::string>>& raw_pairs,
    const embed::EmbeddingStore& target, const embed::EmbeddingStore& source);

struct SvdResult {
  Matrix u;   // d x d orthogonal
  Vec s;      // non-negative, descending
  Matrix vt;  // d x d orthogonal
};

// One-sided Jacobi SVD of a square matrix. Deterministic: fixed sweep
// order, and the largest-magnitude entry of each U column is made positive.
SvdResult svd(const Matrix& m);

struct FitDiagnostics {
  std::string method;       // "svd" or "sgd"
  double squared_loss = 0;  // sum_i ||W x_i - y_i||^2
  double objective = 0;     // sum_i y_i^T W x_i
  std::size_t pairs_used = 0;
  std::size_t pairs_dropped = 0;
  std::size_t near_zero_singular = 0;  // singular values below 1e-10 (rank deficiency)
};

struct AlignmentMap {
  Matrix w;  // d x d, y ~ W x
  Matrix u;  // SVD factors, empty for SGD fits
  Matrix v;
  Vec singular_values;
  FitDiagnostics diagnostics;
};

// Exact solution of the orthogonality-constrained fit: W = U V^T from the
// SVD of Y^T X. Maximizes sum_i y_i^T W x_i over orthogonal W.
AlignmentMap fit_orthogonal(const DictionaryPairs& dict);

// Unconstrained least-squares fit by per-pair gradient steps on
// sum_i ||W x_i - y_i||^2. No orthogonality guarantee.
AlignmentMap fit_sgd(const DictionaryPairs& dict, double lr, int epochs, std::uint64_t seed);

Vec apply(const AlignmentMap& map, const Vec& v);          // W v
Vec apply_inverse(const AlignmentMap& map, const Vec& v);  // W^T v, maps back

double orthogonality_error(const AlignmentMap& map);  // max |W^T W - I|

double procrustes_objective(const Matrix& w, const DictionaryPairs& dict);  // sum y^T W x
double squared_loss(const Matrix& w, const DictionaryPairs& dict);

// Fraction of test pairs whose source token appears in the top-k nearest
// source-store neighbors of the mapped target vector.
double translation_precision(const AlignmentMap& map,
                             const std::vector<std::pair<std::string, std::string>>& test_pairs,
                             const embed::EmbeddingStore& target,
                             const embed::EmbeddingStore& source, std::size_t k);

// Map file: header "xling-align v1 <d>", then d rows of d reals. The loader
// verifies orthogonality within 1e-6 and warns on the given stream otherwise.
void save_map(const AlignmentMap& map, std::ostream& out);
AlignmentMap load_map(std::istream& in, std::ostream* warnings = nullptr);

}  // namespace xling::align
