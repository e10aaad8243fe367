#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlmbias {

enum class Role { stereotype, antistereotype, unrelated };
enum class DatasetKind { cp, ss };
enum class Group { advantaged, disadvantaged };

std::string_view to_string(Role role);
std::string_view to_string(DatasetKind kind);
std::string_view to_string(Group group);
Role role_from_string(std::string_view s);
DatasetKind dataset_from_string(std::string_view s);
Group group_from_string(std::string_view s);

// Half-open byte range into a sentence's raw text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool overlaps(const CharSpan& other) const {
    return begin < other.end && other.begin < end;
  }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

// Modified (M) and unmodified (U) subtoken positions. Both are ordered lists;
// sentence markers are never included.
struct TokenSplit {
  std::vector<std::size_t> modified;
  std::vector<std::size_t> unmodified;

  friend bool operator==(const TokenSplit&, const TokenSplit&) = default;
};

struct Sentence {
  std::string text;
  Role role = Role::stereotype;
  // Filled in by the adapter's tokenizer; empty until then.
  std::vector<std::string> subtokens;
  // Byte span of each subtoken in `text` when the tokenizer reports one.
  std::vector<CharSpan> offsets;
  // SS only: the candidate word that fills the blank.
  std::optional<CharSpan> target_span;
  TokenSplit split;

  bool tokenized() const { return !subtokens.empty(); }
  std::size_t size() const { return subtokens.size(); }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct TestInstance {
  std::string id;
  DatasetKind dataset = DatasetKind::cp;
  std::string bias_type;
  std::optional<Group> group;  // CP only
  std::string context;         // SS only: template containing BLANK
  std::vector<Sentence> sentences;

  const Sentence& sentence(Role role) const;
  Sentence& sentence(Role role);
  const Sentence* find(Role role) const;
  Sentence* find(Role role);

  friend bool operator==(const TestInstance&, const TestInstance&) = default;
};

struct HumanRating {
  std::string instance_id;
  int biased_votes = 0;
};

inline constexpr std::string_view kSsBlank = "BLANK";

// Canonical snake_case bias type, or throws Error for an unknown label.
std::string normalize_bias_type(std::string_view raw, DatasetKind kind);
const std::vector<std::string>& bias_types(DatasetKind kind);

// Checks the structural invariants of an instance (roles, group presence,
// split consistency for tokenized sentences). Throws Error on violation.
void validate(const TestInstance& instance);

std::vector<TestInstance> parse_cp(std::istream& in);
std::vector<TestInstance> load_cp(const std::filesystem::path& path);

std::vector<TestInstance> parse_ss(std::istream& in);
std::vector<TestInstance> load_ss(const std::filesystem::path& path);

// Locates the candidate word in an SS sentence given its BLANK template.
CharSpan locate_blank_filler(std::string_view context, std::string_view sentence);

// Derives M/U for an SS sentence from its tokenizer offsets: subtokens
// overlapping the target span are modified, the rest unmodified.
TokenSplit split_from_target(const Sentence& sentence);

// Canonical one-object-per-line instance format.
std::string to_json_line(const TestInstance& instance);
TestInstance instance_from_json_line(std::string_view line);
void write_instances(std::ostream& out, const std::vector<TestInstance>& instances);
std::vector<TestInstance> read_instances(std::istream& in);

// CSV with header `instance_id,biased_votes`.
std::vector<HumanRating> parse_ratings(std::istream& in);
std::vector<HumanRating> load_ratings(const std::filesystem::path& path);

}  // namespace mlmbias
