#include "agrpose/core/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace agrpose {
namespace {

static_assert(std::endian::native == std::endian::little, "AGRT I/O assumes a little-endian host");

template <class T>
void write_impl(const std::filesystem::path& path, const Tensor<T>& t, std::uint8_t dtype) {
  if (t.rank() > 255) throw data_error(path.string() + ": rank too large");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("cannot open '" + path.string() + "' for writing");
  os.write("AGRT", 4);
  const std::array<std::uint8_t, 3> hdr{kTensorFormatVersion, dtype, std::uint8_t(t.rank())};
  os.write(reinterpret_cast<const char*>(hdr.data()), 3);
  for (auto d : t.dims()) {
    const auto d32 = static_cast<std::uint32_t>(d);
    os.write(reinterpret_cast<const char*>(&d32), 4);
  }
  os.write(reinterpret_cast<const char*>(t.data()), std::streamsize(t.size() * sizeof(T)));
  if (!os) throw data_error("failed writing '" + path.string() + "'");
}

template <class T>
Tensor<T> decode_payload(const std::filesystem::path& path, Shape dims, const char* p, std::size_t avail) {
  const std::size_t n = shape_size(dims);
  if (avail != n * sizeof(T))
    throw data_error(path.string() + ": payload is " + std::to_string(avail) + " bytes, expected " +
                     std::to_string(n * sizeof(T)) + (avail < n * sizeof(T) ? " (truncated)" : ""));
  std::vector<T> data(n);
  std::memcpy(data.data(), p, avail);
  return Tensor<T>(std::move(dims), std::move(data));
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const TensorF& t) { write_impl(path, t, kDtypeF32); }
void write_tensor(const std::filesystem::path& path, const TensorD& t) { write_impl(path, t, kDtypeF64); }

AnyTensor read_any_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot open tensor file '" + path.string() + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 7) throw data_error(path.string() + ": truncated header");
  if (std::memcmp(bytes.data(), "AGRT", 4) != 0) throw data_error(path.string() + ": bad magic bytes");
  const auto version = std::uint8_t(bytes[4]);
  const auto dtype = std::uint8_t(bytes[5]);
  const auto rank = std::uint8_t(bytes[6]);
  if (version != kTensorFormatVersion)
    throw data_error(path.string() + ": unsupported format version " + std::to_string(version));
  if (bytes.size() < 7 + 4 * std::size_t(rank)) throw data_error(path.string() + ": truncated dims");
  Shape dims(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    std::uint32_t d;
    std::memcpy(&d, bytes.data() + 7 + 4 * i, 4);
    if (d == 0) throw data_error(path.string() + ": zero-length dimension");
    dims[i] = d;
  }
  const std::size_t off = 7 + 4 * std::size_t(rank);
  const char* payload = bytes.data() + off;
  const std::size_t avail = bytes.size() - off;
  if (dtype == kDtypeF32) return decode_payload<float>(path, std::move(dims), payload, avail);
  if (dtype == kDtypeF64) return decode_payload<double>(path, std::move(dims), payload, avail);
  throw data_error(path.string() + ": unknown dtype byte " + std::to_string(dtype));
}

template <class T>
Tensor<T> read_tensor(const std::filesystem::path& path) {
  auto any = read_any_tensor(path);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw data_error(path.string() + ": stored dtype does not match the requested precision");
}

template TensorF read_tensor<float>(const std::filesystem::path&);
template TensorD read_tensor<double>(const std::filesystem::path&);

}  // namespace agrpose
