#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xling/matrix.hpp"

namespace xling::embed {

// Character n-gram vector table attached to a store for out-of-vocabulary
// composition. `bracket` wraps words as "<word>" before extraction, for
// compatibility with pretrained subword models that mark word boundaries.
struct NgramTable {
  int nmin = 3;
  int nmax = 4;
  bool bracket = false;
  std::map<std::string, Vec> vectors;

  bool operator==(const NgramTable&) const = default;
};

class EmbeddingStore {
public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Matrix& vectors() const { return vectors_; }

  void add(const std::string& token, const Vec& v);
  int index_of(const std::string& token) const;  // -1 if absent
  const double* row(std::size_t i) const { return vectors_.row(i); }
  Vec row_vec(std::size_t i) const { return vectors_.row_vec(i); }
  void set_row(std::size_t i, const Vec& v) { vectors_.set_row(i, v); }

  std::optional<NgramTable> ngrams;

  bool operator==(const EmbeddingStore& other) const {
    return dim_ == other.dim_ && vocab_ == other.vocab_ && vectors_ == other.vectors_ &&
           ngrams == other.ngrams;
  }

private:
  std::size_t dim_ = 0;
  std::vector<std::string> vocab_;
  Matrix vectors_;
  std::unordered_map<std::string, int> index_;
};

// Text vector format: header "<count> <dim>", then one
// "<token> <v1> ... <vdim>" per line, single-space separated.
EmbeddingStore load_embeddings(std::istream& in, std::optional<std::size_t> limit = std::nullopt);
void save_embeddings(const EmbeddingStore& store, std::ostream& out);

// The sidecar n-gram file reuses the row format, keyed by n-gram string.
void load_ngram_table(EmbeddingStore& store, std::istream& in, int nmin, int nmax, bool bracket);
void save_ngram_table(const EmbeddingStore& store, std::ostream& out);

// L2-normalizes every row; zero rows are left untouched.
EmbeddingStore normalize(EmbeddingStore store);

// All contiguous substrings of length in [nmin, nmax], in UTF-8 code points,
// deduplicated in first-occurrence order. The word's own full-length
// substring appears naturally when its length falls in range.
std::vector<std::string> char_ngrams(const std::string& word, int nmin, int nmax);

// In-vocabulary: the stored row. OOV with an n-gram table: sum of the table
// hits over the word's n-grams. OOV otherwise: the zero vector.
Vec lookup(const EmbeddingStore& store, const std::string& token);

double cosine(const Vec& a, const Vec& b);  // 0 when either vector is zero

// Top-k tokens by cosine similarity to the query, descending; exact ties
// broken by vocabulary order. k beyond the vocabulary returns everything.
std::vector<std::pair<std::string, double>> nearest(const EmbeddingStore& store, const Vec& query,
                                                    std::size_t k);

struct SkipgramConfig {
  std::size_t dim = 300;
  int window = 5;
  int negatives = 5;
  double noise_exponent = 0.75;  // unigram counts ^ exponent for the noise distribution
  int epochs = 5;
  double learning_rate = 0.025;
  int ngram_min = 3;  // 0 disables subwords
  int ngram_max = 4;
  bool bracket = false;
  std::uint64_t seed = 1;
};

struct SkipgramModel {
  Matrix input;    // |V| x dim, v_w
  Matrix output;   // |V| x dim, v'_w
  Matrix ngram_vecs;  // |G| x dim
  std::vector<std::string> vocab;
  std::vector<std::string> ngram_keys;
  std::unordered_map<std::string, int> vocab_index;
  std::unordered_map<std::string, int> ngram_index;
  std::vector<std::vector<int>> word_ngram_rows;  // per word, rows into ngram_vecs
  std::vector<std::size_t> counts;
  SkipgramConfig config;

  bool subwords() const { return config.ngram_min > 0; }
  // v_w plus the sum of the word's n-gram vectors when subwords are enabled.
  Vec composed(std::size_t word) const;
};

// log sigma(v'_ctx . h) + sum_i log sigma(-v'_neg_i . h), h the composed
// center representation. Always <= 0.
double skipgram_neg_objective(const SkipgramModel& model, std::size_t center, std::size_t context,
                              const std::vector<std::size_t>& negatives);

// One exact gradient-ascent step on the objective above: all gradients are
// taken at the pre-step parameters, then applied at once.
void skipgram_step(SkipgramModel& model, std::size_t center, std::size_t context,
                   const std::vector<std::size_t>& negatives, double lr);

struct SkipgramResult {
  EmbeddingStore store;
  SkipgramModel model;
  Vec objective_trace;  // per-epoch mean NEG objective at pre-update parameters
};

SkipgramResult train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                              const SkipgramConfig& config);

}  // namespace xling::embed
