#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qreason/diffcore/params.hpp"

namespace qreason::diff {

// Binary parameter container:
//   "QRCK" | version u32 | count u32 |
//   per tensor: name_len u16 | name | rank u8 | dims u32 x rank | f32 data
// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[4] = {'Q', 'R', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<StoredTensor>& tensors);
std::vector<StoredTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
std::vector<StoredTensor> export_params(const ParamSet<T>& params);

// Names and shapes must match the registry exactly.
template <typename T>
void import_params(const std::vector<StoredTensor>& tensors, ParamSet<T>& params);

template <typename T>
void save_checkpoint(const ParamSet<T>& params, const std::filesystem::path& path);

template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params);

extern template std::vector<StoredTensor> export_params(const ParamSet<float>&);
extern template std::vector<StoredTensor> export_params(const ParamSet<double>&);
extern template void import_params(const std::vector<StoredTensor>&, ParamSet<float>&);
extern template void import_params(const std::vector<StoredTensor>&, ParamSet<double>&);
extern template void save_checkpoint(const ParamSet<float>&, const std::filesystem::path&);
extern template void save_checkpoint(const ParamSet<double>&, const std::filesystem::path&);
extern template void load_checkpoint(const std::filesystem::path&, ParamSet<float>&);
extern template void load_checkpoint(const std::filesystem::path&, ParamSet<double>&);

}  // namespace qreason::diff
