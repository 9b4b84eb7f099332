#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace xling::corpus {

// IOB2 tag set derived from an ordered list of entity types:
// index 0 is O, then B-T/I-T for each type in order.
class LabelScheme {
public:
  static constexpr int kOutside = 0;

  explicit LabelScheme(std::vector<std::string> entity_types);

  std::size_t num_tags() const { return tags_.size(); }
  const std::vector<std::string>& entity_types() const { return entity_types_; }
  const std::vector<std::string>& tags() const { return tags_; }

  int tag_index(const std::string& tag) const;  // -1 if unknown
  const std::string& tag_name(int idx) const { return tags_[static_cast<std::size_t>(idx)]; }

  bool is_begin(int idx) const { return idx > 0 && (idx - 1) % 2 == 0; }
  bool is_inside(int idx) const { return idx > 0 && (idx - 1) % 2 == 1; }
  int entity_type_of(int idx) const { return idx > 0 ? (idx - 1) / 2 : -1; }
  int begin_tag(int etype) const { return 1 + 2 * etype; }
  int inside_tag(int etype) const { return 2 + 2 * etype; }

  bool operator==(const LabelScheme& other) const { return entity_types_ == other.entity_types_; }

private:
  std::vector<std::string> entity_types_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

struct LabeledSequence {
  std::vector<std::string> tokens;
  std::vector<int> tags;

  bool operator==(const LabeledSequence&) const = default;
};

struct EntitySpan {
  std::size_t start;  // inclusive
  std::size_t end;    // exclusive
  int etype;

  auto operator<=>(const EntitySpan&) const = default;
};

enum class IobViolationKind { OrphanInside, TypeSwitch };

struct IobViolation {
  std::size_t pos;
  IobViolationKind kind;

  bool operator==(const IobViolation&) const = default;
};

// CoNLL-style column format: "<token><sep><tag>" lines, blank line ends a
// sentence, "-DOCSTART-" lines skipped. Separator is auto-detected per file
// (tab preferred, single space fallback); mixed separators are rejected.
// Sequences are IOB2-canonicalized on ingestion.
std::vector<LabeledSequence> parse_conll(std::istream& in, const LabelScheme& scheme);

// Canonical form: tab separator, one blank line between sentences, trailing
// newline after the last token line. parse(serialize(x)) == x.
void serialize_conll(const std::vector<LabeledSequence>& seqs, const LabelScheme& scheme,
                     std::ostream& out);

std::vector<IobViolation> validate_iob(const std::vector<int>& tags, const LabelScheme& scheme);
std::vector<int> canonicalize_iob(const std::vector<int>& tags, const LabelScheme& scheme);
std::vector<EntitySpan> entity_spans(const std::vector<int>& tags, const LabelScheme& scheme);
std::vector<int> spans_to_tags(const std::vector<EntitySpan>& spans, std::size_t length,
                               const LabelScheme& scheme);

// Seeded shuffle, then contiguous (train, dev, test) partition. Dev/test
// sizes are floored; the remainder goes to train.
std::array<std::vector<LabeledSequence>, 3> split_dataset(const std::vector<LabeledSequence>& data,
                                                          std::array<double, 3> fractions,
                                                          std::uint64_t seed);

}  // namespace xling::corpus
