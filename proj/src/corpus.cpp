#include "xling/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "xling/errors.hpp"
#include "xling/util.hpp"

namespace xling::corpus {

LabelScheme::LabelScheme(std::vector<std::string> entity_types)
    : entity_types_(std::move(entity_types)) {
  tags_.push_back("O");
  for (const auto& t : entity_types_) {
    if (t.empty()) throw ValueError("empty entity type name");
    if (t.find_first_of(" \t\n") != std::string::npos)
      throw ValueError("entity type contains whitespace: '" + t + "'");
    tags_.push_back("B-" + t);
    tags_.push_back("I-" + t);
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!index_.emplace(tags_[i], static_cast<int>(i)).second)
      throw ValueError("duplicate entity type: '" + tags_[i] + "'");
  }
}

int LabelScheme::tag_index(const std::string& tag) const {
  auto it = index_.find(tag);
  return it == index_.end() ? -1 : it->second;
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<LabeledSequence> parse_conll(std::istream& in, const LabelScheme& scheme) {
  std::vector<LabeledSequence> out;
  LabeledSequence current;
  std::string line;
  std::size_t lineno = 0;
  char sep = 0;  // detected from the first content line
  bool first_line = true;

  auto flush = [&] {
    if (!current.tokens.empty()) {
      current.tags = canonicalize_iob(current.tags, scheme);
      out.push_back(std::move(current));
      current = LabeledSequence{};
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (first_line) {
      // Drop a UTF-8 BOM if present.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      first_line = false;
    }
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) continue;

    if (sep == 0) sep = line.find('\t') != std::string::npos ? '\t' : ' ';
    std::size_t pos = line.find(sep);
    if (pos == std::string::npos || (sep == ' ' && line.find('\t') != std::string::npos))
      throw ParseError("expected \"<token><sep><tag>\" with a consistent separator", lineno);
    std::string token = line.substr(0, pos);
    std::string tag = line.substr(pos + 1);
    if (token.empty()) throw ParseError("empty token", lineno);
    int idx = scheme.tag_index(tag);
    if (idx < 0) throw ParseError("unknown tag '" + tag + "'", lineno);
    current.tokens.push_back(std::move(token));
    current.tags.push_back(idx);
  }
  flush();
  return out;
}

void serialize_conll(const std::vector<LabeledSequence>& seqs, const LabelScheme& scheme,
                     std::ostream& out) {
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    if (s > 0) out << '\n';
    const auto& seq = seqs[s];
    for (std::size_t i = 0; i < seq.tokens.size(); ++i)
      out << seq.tokens[i] << '\t' << scheme.tag_name(seq.tags[i]) << '\n';
  }
}

std::vector<IobViolation> validate_iob(const std::vector<int>& tags, const LabelScheme& scheme) {
  std::vector<IobViolation> violations;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    int t = tags[i];
    if (!scheme.is_inside(t)) continue;
    int etype = scheme.entity_type_of(t);
    int prev = i == 0 ? LabelScheme::kOutside : tags[i - 1];
    if (prev != LabelScheme::kOutside && scheme.entity_type_of(prev) == etype) continue;
    bool prev_entity = prev != LabelScheme::kOutside;
    violations.push_back({i, prev_entity ? IobViolationKind::TypeSwitch
                                         : IobViolationKind::OrphanInside});
  }
  return violations;
}

std::vector<int> canonicalize_iob(const std::vector<int>& tags, const LabelScheme& scheme) {
  std::vector<int> out = tags;
  for (std::size_t i = 0; i < out.size(); ++i) {
    int t = out[i];
    if (!scheme.is_inside(t)) continue;
    int etype = scheme.entity_type_of(t);
    int prev = i == 0 ? LabelScheme::kOutside : out[i - 1];
    if (prev == LabelScheme::kOutside || scheme.entity_type_of(prev) != etype)
      out[i] = scheme.begin_tag(etype);
  }
  return out;
}

std::vector<EntitySpan> entity_spans(const std::vector<int>& tags, const LabelScheme& scheme) {
  if (!validate_iob(tags, scheme).empty())
    throw ValueError("entity_spans: tag sequence is not valid IOB2");
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (!scheme.is_begin(tags[i])) {
      ++i;
      continue;
    }
    int etype = scheme.entity_type_of(tags[i]);
    std::size_t start = i++;
    while (i < tags.size() && tags[i] == scheme.inside_tag(etype)) ++i;
    spans.push_back({start, i, etype});
  }
  return spans;
}

std::vector<int> spans_to_tags(const std::vector<EntitySpan>& spans, std::size_t length,
                               const LabelScheme& scheme) {
  std::vector<int> tags(length, LabelScheme::kOutside);
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > length)
      throw ValueError("spans_to_tags: span out of range");
    tags[span.start] = scheme.begin_tag(span.etype);
    for (std::size_t i = span.start + 1; i < span.end; ++i)
      tags[i] = scheme.inside_tag(span.etype);
  }
  return tags;
}

std::array<std::vector<LabeledSequence>, 3> split_dataset(const std::vector<LabeledSequence>& data,
                                                          std::array<double, 3> fractions,
                                                          std::uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (fractions[0] <= 0 || fractions[1] <= 0 || fractions[2] <= 0 ||
      std::fabs(sum - 1.0) > 1e-9)
    throw ValueError("split fractions must be positive and sum to 1");

  std::vector<LabeledSequence> shuffled = data;
  Rng rng(seed);
  rng.shuffle(shuffled);

  std::size_t n = shuffled.size();
  auto n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
  auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2]));
  std::size_t n_train = n - n_dev - n_test;

  std::array<std::vector<LabeledSequence>, 3> out;
  out[0].assign(shuffled.begin(), shuffled.begin() + n_train);
  out[1].assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_dev);
  out[2].assign(shuffled.begin() + n_train + n_dev, shuffled.end());
  return out;
}

}  // namespace xling::corpus
