#include "qreason/diffcore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace qreason::diff {

namespace {

static_assert(sizeof(float) == 4);

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw RuntimeFailure("checkpoint: truncated data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<StoredTensor>& tensors) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xFFFF) throw InvalidInput("checkpoint: parameter name too long");
    if (t.dims.empty() || t.dims.size() > 3) throw InvalidInput("checkpoint: rank must be 1..3");
    std::size_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.data.size()) throw InvalidInput("checkpoint: dims do not match data for '" + t.name + "'");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_le<std::uint32_t>(out, d);
    for (float f : t.data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<StoredTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.bytes(4) != std::string(kCheckpointMagic, 4)) throw RuntimeFailure("checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw RuntimeFailure("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<StoredTensor> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    StoredTensor t;
    t.name = in.bytes(in.get<std::uint16_t>());
    const auto rank = in.get<std::uint8_t>();
    if (rank == 0 || rank > 3) throw RuntimeFailure("checkpoint: invalid rank for '" + t.name + "'");
    std::size_t n = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.get<std::uint32_t>());
      n *= t.dims.back();
    }
    t.data.resize(n);
    for (auto& f : t.data) f = std::bit_cast<float>(in.get<std::uint32_t>());
    tensors.push_back(std::move(t));
  }
  if (!in.done()) throw RuntimeFailure("checkpoint: trailing bytes");
  return tensors;
}

template <typename T>
std::vector<StoredTensor> export_params(const ParamSet<T>& params) {
  std::vector<StoredTensor> out;
  for (const auto& p : params.entries()) {
    StoredTensor t;
    t.name = p.name;
    const auto& v = p.var.value();
    if (p.rank == 1) {
      t.dims = {static_cast<std::uint32_t>(v.size())};
    } else {
      t.dims = {static_cast<std::uint32_t>(v.rows()), static_cast<std::uint32_t>(v.cols())};
    }
    t.data.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(v.data()[i]);
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
void import_params(const std::vector<StoredTensor>& tensors, ParamSet<T>& params) {
  if (tensors.size() != params.size()) {
    throw RuntimeFailure("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                         std::to_string(tensors.size()));
  }
  auto& entries = params.entries();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& t = tensors[k];
    auto& p = entries[k];
    auto& v = p.var.mutable_value();
    const bool shape_ok = p.rank == 1 ? (t.dims.size() == 1 && t.dims[0] == v.size())
                                      : (t.dims.size() == 2 && t.dims[0] == v.rows() && t.dims[1] == v.cols());
    if (t.name != p.name || !shape_ok) {
      throw RuntimeFailure("checkpoint: tensor '" + t.name + "' does not match parameter '" + p.name + "'");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<T>(t.data[static_cast<std::size_t>(i)]);
  }
}

template <typename T>
void save_checkpoint(const ParamSet<T>& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(export_params(params));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("checkpoint: cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  import_params(decode_checkpoint(bytes), params);
}

template std::vector<StoredTensor> export_params(const ParamSet<float>&);
template std::vector<StoredTensor> export_params(const ParamSet<double>&);
template void import_params(const std::vector<StoredTensor>&, ParamSet<float>&);
template void import_params(const std::vector<StoredTensor>&, ParamSet<double>&);
template void save_checkpoint(const ParamSet<float>&, const std::filesystem::path&);
template void save_checkpoint(const ParamSet<double>&, const std::filesystem::path&);
template void load_checkpoint(const std::filesystem::path&, ParamSet<float>&);
template void load_checkpoint(const std::filesystem::path&, ParamSet<double>&);

}  // namespace qreason::diff
