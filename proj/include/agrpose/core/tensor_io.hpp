#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include "agrpose/core/tensor.hpp"

namespace agrpose {

/// AGRT tensor files:
///   "AGRT" | version u8 (0x01) | dtype u8 (0x01 f32, 0x02 f64) | rank u8 |
///   rank x u32 dims (LE) | row-major payload (LE)
inline constexpr std::uint8_t kTensorFormatVersion = 0x01;
inline constexpr std::uint8_t kDtypeF32 = 0x01;
inline constexpr std::uint8_t kDtypeF64 = 0x02;

using AnyTensor = std::variant<TensorF, TensorD>;

void write_tensor(const std::filesystem::path& path, const TensorF& t);
void write_tensor(const std::filesystem::path& path, const TensorD& t);

/// Throws a data error naming `path` on bad magic, version, dtype, or truncation.
AnyTensor read_any_tensor(const std::filesystem::path& path);

/// Reads a tensor that must have been stored with the matching dtype.
template <class T>
Tensor<T> read_tensor(const std::filesystem::path& path);

extern template TensorF read_tensor<float>(const std::filesystem::path&);
extern template TensorD read_tensor<double>(const std::filesystem::path&);

}  // namespace agrpose
