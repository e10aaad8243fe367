#include "mlmbias/alignment.hpp"

#include <algorithm>

namespace mlmbias {

namespace {

// suffix[i][j] = LCS length of x[i..] and y[j..], stored row-major.
std::vector<std::size_t> suffix_table(const std::vector<std::string>& x,
                                      const std::vector<std::string>& y) {
  const std::size_t n = x.size(), m = y.size();
  std::vector<std::size_t> table((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return table[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      at(i, j) = x[i] == y[j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
    }
  }
  return table;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& kept) {
  std::vector<std::size_t> out;
  out.reserve(n - kept.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < kept.size() && kept[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return suffix_table(a, b)[0];
}

std::pair<TokenSplit, TokenSplit> split_tokens(const std::vector<std::string>& a,
                                               const std::vector<std::string>& b) {
  const bool swapped = b < a;
  const auto& x = swapped ? b : a;
  const auto& y = swapped ? a : b;
  const std::size_t n = x.size(), m = y.size();
  const auto table = suffix_table(x, y);
  auto at = [&](std::size_t i, std::size_t j) { return table[i * (m + 1) + j]; };

  TokenSplit sx, sy;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (x[i] == y[j]) {
      sx.unmodified.push_back(i++);
      sy.unmodified.push_back(j++);
    } else if (at(i, j + 1) >= at(i + 1, j)) {
      ++j;  // keep x[i] available for a later match
    } else {
      ++i;
    }
  }
  sx.modified = complement(n, sx.unmodified);
  sy.modified = complement(m, sy.unmodified);
  if (swapped) return {std::move(sy), std::move(sx)};
  return {std::move(sx), std::move(sy)};
}

}  // namespace mlmbias
