#pragma once

#include <filesystem>
#include <string>

#include "sbssl/tensor.hpp"
#include "sbssl/volume.hpp"

namespace sbssl {

/// Reads an NPY v1.0/v2.0 container holding one volume, shape (f,H,W),
/// C-order, dtype u1/f4/f8. Intensities are brought into [0,1]: u1 divides
/// by 255; float payloads already inside [0,1] pass through unchanged (so
/// write_npy followed by read_npy is the identity), anything else is
/// per-volume min-max normalized, with constant volumes mapping to zeros.
/// Malformed containers raise NpyError with a code naming the defect.
Volume read_npy(const std::filesystem::path& path);

/// Writes slices [f,H,W] as an NPY v1.0 container, dtype <f4, C-order,
/// little-endian, header padded so the payload starts 64-byte aligned.
/// Values are cast to float32; volumes written by this function therefore
/// read back bit-identically. Empty tensors are rejected.
void write_npy(const Tensor& slices, const std::filesystem::path& path);

}  // namespace sbssl
