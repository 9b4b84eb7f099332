#include "xling/embed.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "xling/errors.hpp"
#include "xling/util.hpp"

namespace xling::embed {

void EmbeddingStore::add(const std::string& token, const Vec& v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) throw ShapeError("vector length does not match store dimension");
  if (!index_.emplace(token, static_cast<int>(vocab_.size())).second)
    throw ValueError("duplicate token '" + token + "'");
  vocab_.push_back(token);
  vectors_.append_row(v);
}

int EmbeddingStore::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

namespace {

struct ParsedRow {
  std::string token;
  Vec values;
};

ParsedRow parse_row(const std::string& line, std::size_t dim, std::size_t lineno) {
  auto fields = split(line, ' ');
  if (fields.size() != dim + 1)
    throw ParseError("expected token plus " + std::to_string(dim) + " values, got " +
                         std::to_string(fields.size() > 0 ? fields.size() - 1 : 0),
                     lineno);
  ParsedRow row;
  row.token = std::string(fields[0]);
  if (row.token.empty()) throw ParseError("empty token", lineno);
  row.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!parse_double(fields[i + 1], row.values[i]))
      throw ParseError("bad number '" + std::string(fields[i + 1]) + "'", lineno);
  }
  return row;
}

void parse_header(std::istream& in, std::size_t& count, std::size_t& dim) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto fields = split(line, ' ');
  if (fields.size() != 2 || !parse_size(fields[0], count) || !parse_size(fields[1], dim) ||
      dim == 0)
    throw ParseError("malformed header, expected \"<count> <dim>\"", 1);
}

}  // namespace

EmbeddingStore load_embeddings(std::istream& in, std::optional<std::size_t> limit) {
  std::size_t count = 0, dim = 0;
  parse_header(in, count, dim);
  std::size_t want = limit ? std::min(count, *limit) : count;

  EmbeddingStore store(dim);
  std::string line;
  for (std::size_t i = 0; i < want; ++i) {
    if (!std::getline(in, line))
      throw ParseError("unexpected end of file, header promised " + std::to_string(count) +
                           " rows",
                       i + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ParsedRow row = parse_row(line, dim, i + 2);
    if (store.index_of(row.token) >= 0)
      throw ParseError("duplicate token '" + row.token + "'", i + 2);
    store.add(row.token, row.values);
  }
  return store;
}

void save_embeddings(const EmbeddingStore& store, std::ostream& out) {
  out << store.size() << ' ' << store.dim() << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.vocab()[i];
    const double* row = store.row(i);
    for (std::size_t j = 0; j < store.dim(); ++j) out << ' ' << format_double(row[j]);
    out << '\n';
  }
}

void load_ngram_table(EmbeddingStore& store, std::istream& in, int nmin, int nmax, bool bracket) {
  std::size_t count = 0, dim = 0;
  parse_header(in, count, dim);
  if (dim != store.dim()) throw ShapeError("n-gram table dimension does not match store");
  NgramTable table;
  table.nmin = nmin;
  table.nmax = nmax;
  table.bracket = bracket;
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError("unexpected end of n-gram file", i + 2);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ParsedRow row = parse_row(line, dim, i + 2);
    if (!table.vectors.emplace(row.token, std::move(row.values)).second)
      throw ParseError("duplicate n-gram '" + row.token + "'", i + 2);
  }
  store.ngrams = std::move(table);
}

void save_ngram_table(const EmbeddingStore& store, std::ostream& out) {
  if (!store.ngrams) throw ValueError("store has no n-gram table");
  const auto& table = *store.ngrams;
  out << table.vectors.size() << ' ' << store.dim() << '\n';
  for (const auto& [gram, v] : table.vectors) {
    out << gram;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  }
}

EmbeddingStore normalize(EmbeddingStore store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    Vec v = store.row_vec(i);
    double n = norm2(v);
    if (n == 0.0) continue;
    for (double& x : v) x /= n;
    store.set_row(i, v);
  }
  return store;
}

namespace {

// Splits into UTF-8 code points; a malformed byte stands alone.
std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < s.size()) {
    auto byte = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((byte & 0xE0) == 0xC0) len = 2;
    else if ((byte & 0xF0) == 0xE0) len = 3;
    else if ((byte & 0xF8) == 0xF0) len = 4;
    if (i + len > s.size()) len = 1;
    chars.push_back(s.substr(i, len));
    i += len;
  }
  return chars;
}

}  // namespace

std::vector<std::string> char_ngrams(const std::string& word, int nmin, int nmax) {
  if (nmin < 1 || nmax < nmin) throw ValueError("char_ngrams: need 1 <= nmin <= nmax");
  auto chars = utf8_chars(word);
  std::vector<std::string> grams;
  std::unordered_set<std::string> seen;
  auto n_chars = static_cast<int>(chars.size());
  for (int len = nmin; len <= std::min(nmax, n_chars); ++len) {
    for (int start = 0; start + len <= n_chars; ++start) {
      std::string g;
      for (int j = 0; j < len; ++j) g += chars[static_cast<std::size_t>(start + j)];
      if (seen.insert(g).second) grams.push_back(std::move(g));
    }
  }
  return grams;
}

Vec lookup(const EmbeddingStore& store, const std::string& token) {
  int idx = store.index_of(token);
  if (idx >= 0) return store.row_vec(static_cast<std::size_t>(idx));
  Vec v(store.dim(), 0.0);
  if (!store.ngrams) return v;
  const auto& table = *store.ngrams;
  std::string key = table.bracket ? "<" + token + ">" : token;
  for (const auto& gram : char_ngrams(key, table.nmin, table.nmax)) {
    auto it = table.vectors.find(gram);
    if (it != table.vectors.end()) axpy(1.0, it->second, v);
  }
  return v;
}

double cosine(const Vec& a, const Vec& b) {
  double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<std::pair<std::string, double>> nearest(const EmbeddingStore& store, const Vec& query,
                                                    std::size_t k) {
  if (query.size() != store.dim()) throw ShapeError("query dimension does not match store");
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(store.size());
  double qn = norm2(query);
  for (std::size_t i = 0; i < store.size(); ++i) {
    double rn = std::sqrt(dot(store.row(i), store.row(i), store.dim()));
    double cos = (qn == 0.0 || rn == 0.0)
                     ? 0.0
                     : dot(store.row(i), query.data(), store.dim()) / (qn * rn);
    scored.emplace_back(store.vocab()[i], cos);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sigmoid(double x) {
  // log(sigma(x)) = -log(1 + exp(-x)), stable on both tails.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

Vec SkipgramModel::composed(std::size_t word) const {
  Vec h = input.row_vec(word);
  if (subwords()) {
    for (int row : word_ngram_rows[word])
      axpy(1.0, ngram_vecs.row_vec(static_cast<std::size_t>(row)), h);
  }
  return h;
}

double skipgram_neg_objective(const SkipgramModel& model, std::size_t center, std::size_t context,
                              const std::vector<std::size_t>& negatives) {
  Vec h = model.composed(center);
  double obj = log_sigmoid(dot(model.output.row(context), h.data(), h.size()));
  for (std::size_t neg : negatives)
    obj += log_sigmoid(-dot(model.output.row(neg), h.data(), h.size()));
  return obj;
}

void skipgram_step(SkipgramModel& model, std::size_t center, std::size_t context,
                   const std::vector<std::size_t>& negatives, double lr) {
  Vec h = model.composed(center);
  std::size_t dim = h.size();

  Vec dh(dim, 0.0);
  // Output-side gradients keyed by row so repeated samples accumulate
  // before anything is applied.
  std::map<std::size_t, Vec> dout;
  auto accumulate = [&](std::size_t word, double label) {
    double s = sigmoid(dot(model.output.row(word), h.data(), dim));
    double g = label - s;
    auto it = dout.try_emplace(word, Vec(dim, 0.0)).first;
    for (std::size_t j = 0; j < dim; ++j) {
      it->second[j] += g * h[j];
      dh[j] += g * model.output(word, j);
    }
  };
  accumulate(context, 1.0);
  for (std::size_t neg : negatives) accumulate(neg, 0.0);

  for (const auto& [word, grad] : dout) {
    for (std::size_t j = 0; j < dim; ++j) model.output(word, j) += lr * grad[j];
  }
  for (std::size_t j = 0; j < dim; ++j) model.input(center, j) += lr * dh[j];
  if (model.subwords()) {
    for (int row : model.word_ngram_rows[center])
      for (std::size_t j = 0; j < dim; ++j)
        model.ngram_vecs(static_cast<std::size_t>(row), j) += lr * dh[j];
  }
}

namespace {

// Cumulative noise distribution over the vocabulary: unigram counts raised
// to the configured exponent.
struct NoiseSampler {
  Vec cumulative;

  NoiseSampler(const std::vector<std::size_t>& counts, double exponent) {
    cumulative.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      total += std::pow(static_cast<double>(counts[i]), exponent);
      cumulative[i] = total;
    }
  }

  std::size_t draw(Rng& rng) const {
    double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::size_t>(it - cumulative.begin());
  }

  // Avoids drawing the positive word itself, like the reference
  // implementations; gives up after a bounded number of tries so a
  // one-word vocabulary still terminates.
  std::size_t draw_negative(Rng& rng, std::size_t exclude) const {
    for (int tries = 0; tries < 100; ++tries) {
      std::size_t s = draw(rng);
      if (s != exclude) return s;
    }
    return draw(rng);
  }
};

}  // namespace

SkipgramResult train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                              const SkipgramConfig& config) {
  if (config.dim == 0) throw ValueError("dim must be positive");
  if (config.window < 1) throw ValueError("window must be positive");
  if (config.negatives < 0) throw ValueError("negatives must be non-negative");
  if (config.noise_exponent < 0.0 || config.noise_exponent > 1.0)
    throw ValueError("noise_exponent must be in [0, 1]");
  bool subwords = config.ngram_min > 0;
  if (subwords && config.ngram_max < config.ngram_min)
    throw ValueError("ngram_min must not exceed ngram_max");

  SkipgramModel model;
  model.config = config;

  // Vocabulary in first-occurrence order.
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) {
      auto [it, fresh] = model.vocab_index.try_emplace(token, static_cast<int>(model.vocab.size()));
      if (fresh) {
        model.vocab.push_back(token);
        model.counts.push_back(0);
      }
      ++model.counts[static_cast<std::size_t>(it->second)];
    }
  }
  if (model.vocab.empty()) throw ValueError("empty corpus");

  if (subwords) {
    model.word_ngram_rows.resize(model.vocab.size());
    for (std::size_t w = 0; w < model.vocab.size(); ++w) {
      std::string key = config.bracket ? "<" + model.vocab[w] + ">" : model.vocab[w];
      for (const auto& gram : char_ngrams(key, config.ngram_min, config.ngram_max)) {
        auto [it, fresh] =
            model.ngram_index.try_emplace(gram, static_cast<int>(model.ngram_keys.size()));
        if (fresh) model.ngram_keys.push_back(gram);
        model.word_ngram_rows[w].push_back(it->second);
      }
    }
  }

  Rng rng(config.seed);
  double half_width = 0.5 / static_cast<double>(config.dim);
  model.input = Matrix(model.vocab.size(), config.dim);
  for (double& x : model.input.data()) x = rng.uniform(-half_width, half_width);
  model.output = Matrix(model.vocab.size(), config.dim);  // zeros
  if (subwords) {
    model.ngram_vecs = Matrix(model.ngram_keys.size(), config.dim);
    for (double& x : model.ngram_vecs.data()) x = rng.uniform(-half_width, half_width);
  }

  NoiseSampler noise(model.counts, config.noise_exponent);
  SkipgramResult result;

  std::vector<std::size_t> negatives;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double objective_sum = 0.0;
    std::size_t n_pairs = 0;
    for (const auto& sentence : corpus) {
      auto len = static_cast<long>(sentence.size());
      for (long t = 0; t < len; ++t) {
        auto center =
            static_cast<std::size_t>(model.vocab_index.at(sentence[static_cast<std::size_t>(t)]));
        for (long j = -config.window; j <= config.window; ++j) {
          if (j == 0 || t + j < 0 || t + j >= len) continue;
          auto context = static_cast<std::size_t>(
              model.vocab_index.at(sentence[static_cast<std::size_t>(t + j)]));
          negatives.clear();
          for (int neg = 0; neg < config.negatives; ++neg)
            negatives.push_back(noise.draw_negative(rng, context));
          objective_sum += skipgram_neg_objective(model, center, context, negatives);
          ++n_pairs;
          skipgram_step(model, center, context, negatives, config.learning_rate);
        }
      }
    }
    result.objective_trace.push_back(n_pairs > 0 ? objective_sum / static_cast<double>(n_pairs)
                                                 : 0.0);
  }

  result.store = EmbeddingStore(config.dim);
  for (std::size_t w = 0; w < model.vocab.size(); ++w)
    result.store.add(model.vocab[w], model.input.row_vec(w));
  if (subwords) {
    NgramTable table;
    table.nmin = config.ngram_min;
    table.nmax = config.ngram_max;
    table.bracket = config.bracket;
    for (std::size_t g = 0; g < model.ngram_keys.size(); ++g)
      table.vectors.emplace(model.ngram_keys[g], model.ngram_vecs.row_vec(g));
    result.store.ngrams = std::move(table);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace xling::embed
