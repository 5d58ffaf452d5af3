#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qreason/textenc/vocab.hpp"

namespace qreason::text {

using Mask = std::vector<std::uint8_t>;

// <s> first... </s> </s> second... </s> <pad>...
struct AssembledPair {
  std::vector<int> ids;   // padded to total_length
  int length = 0;         // unpadded length
  int first_offset = 1;   // position of the first token of the first segment
  int second_offset = 0;  // position of the first token of the second segment
  int n = 0;              // tokens kept from the first segment
  int m = 0;              // tokens kept from the second segment
  int n_max = 0;
  int m_max = 0;
  Mask first_mask;   // n_max entries, true on kept first-segment rows
  Mask second_mask;  // m_max entries
  bool truncated = false;

  std::span<const int> unpadded() const { return {ids.data(), static_cast<std::size_t>(length)}; }
};

inline int assembled_length(int n_max, int m_max) { return n_max + m_max + 1; }

// Knowledge keeps at most n_max - 2 tokens and the statement at most m_max - 1;
// overflow is dropped from the right and flagged.
AssembledPair assemble_pair(std::span<const std::string> knowledge, std::span<const std::string> statement,
                            const Vocab& vocab, int n_max, int m_max);

}  // namespace qreason::text
