#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mlmbias/dataset.hpp"

namespace mlmbias {

// Splits two subtoken sequences into modified/unmodified position lists.
//
// The unmodified positions are a longest common subsequence of the two lists,
// matched one-to-one, so both sides always get the same |U|. When several
// alignments share the maximal length, matches are taken as early as possible
// in whichever argument is lexicographically smaller. That keeps the result a
// pure function of the unordered pair: swapping the arguments swaps the
// outputs.
std::pair<TokenSplit, TokenSplit> split_tokens(const std::vector<std::string>& a,
                                               const std::vector<std::string>& b);

inline std::pair<TokenSplit, TokenSplit> split_tokens(const Sentence& a, const Sentence& b) {
  return split_tokens(a.subtokens, b.subtokens);
}

// Length of the longest common subsequence (DP, no backtracking).
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace mlmbias
