#include "qreason/textenc/assemble.hpp"

#include <algorithm>

#include "qreason/error.hpp"

namespace qreason::text {

AssembledPair assemble_pair(std::span<const std::string> knowledge, std::span<const std::string> statement,
                            const Vocab& vocab, int n_max, int m_max) {
  if (n_max < 3 || m_max < 2) throw InvalidInput("assemble_pair: segment lengths too small");
  AssembledPair out;
  out.n_max = n_max;
  out.m_max = m_max;
  const auto n_cap = static_cast<std::size_t>(n_max - 2);
  const auto m_cap = static_cast<std::size_t>(m_max - 1);
  out.n = static_cast<int>(std::min(knowledge.size(), n_cap));
  out.m = static_cast<int>(std::min(statement.size(), m_cap));
  out.truncated = knowledge.size() > n_cap || statement.size() > m_cap;

  out.ids.reserve(static_cast<std::size_t>(assembled_length(n_max, m_max)));
  out.ids.push_back(Vocab::kBegin);
  for (int i = 0; i < out.n; ++i) out.ids.push_back(vocab.id(knowledge[static_cast<std::size_t>(i)]));
  out.ids.push_back(Vocab::kEnd);
  out.ids.push_back(Vocab::kEnd);
  out.second_offset = static_cast<int>(out.ids.size());
  for (int i = 0; i < out.m; ++i) out.ids.push_back(vocab.id(statement[static_cast<std::size_t>(i)]));
  out.ids.push_back(Vocab::kEnd);
  out.length = static_cast<int>(out.ids.size());
  out.ids.resize(static_cast<std::size_t>(assembled_length(n_max, m_max)), Vocab::kPad);

  out.first_mask.assign(static_cast<std::size_t>(n_max), 0);
  std::fill_n(out.first_mask.begin(), out.n, 1);
  out.second_mask.assign(static_cast<std::size_t>(m_max), 0);
  std::fill_n(out.second_mask.begin(), out.m, 1);
  return out;
}

}  // namespace qreason::text
