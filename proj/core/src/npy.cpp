#include "sbssl/npy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "sbssl/errors.hpp"

namespace sbssl {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

NpyError fail(NpyError::Code code, const std::filesystem::path& path, const std::string& detail) {
  return NpyError(code, path.string() + ": " + detail);
}

std::uint32_t read_le(const unsigned char* bytes, int count) {
  std::uint32_t value = 0;
  for (int i = count - 1; i >= 0; --i) value = (value << 8) | bytes[i];
  return value;
}

/// Extracts the value substring for 'key': ... within the header dict.
std::string header_field(const std::string& header, const std::string& key,
                         const std::filesystem::path& path) {
  const std::string quoted = "'" + key + "'";
  std::size_t at = header.find(quoted);
  if (at == std::string::npos) {
    throw fail(NpyError::Code::bad_header, path, "header lacks key " + quoted);
  }
  at = header.find(':', at + quoted.size());
  if (at == std::string::npos) {
    throw fail(NpyError::Code::bad_header, path, "malformed header near " + quoted);
  }
  ++at;
  while (at < header.size() && header[at] == ' ') ++at;
  std::size_t end = at;
  int depth = 0;
  while (end < header.size()) {
    const char c = header[end];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
    ++end;
  }
  return header.substr(at, end - at);
}

double float_from_le(const unsigned char* bytes) {
  const std::uint32_t bits = read_le(bytes, 4);
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

double double_from_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

/// u1 scales by 1/255; floats already in [0,1] pass through; other floats
/// are min-max normalized per volume, constants collapsing to zero.
void normalize(std::vector<double>& values, bool integer_payload,
               const std::filesystem::path& path) {
  if (integer_payload) {
    for (double& v : values) v /= 255.0;
    return;
  }
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw fail(NpyError::Code::non_finite, path, "non-finite value in payload");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo >= 0.0 && hi <= 1.0) return;
  const double range = hi - lo;
  if (range == 0.0) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (double& v : values) v = (v - lo) / range;
}

}  // namespace

Volume read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fail(NpyError::Code::io, path, "cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw fail(NpyError::Code::io, path, "read failure");

  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw fail(NpyError::Code::bad_magic, path, "missing NPY magic bytes");
  }
  const int major = bytes[6];
  const int minor = bytes[7];
  if ((major != 1 && major != 2) || minor != 0) {
    throw fail(NpyError::Code::bad_version, path,
               "unsupported version " + std::to_string(major) + "." + std::to_string(minor));
  }

  std::size_t header_start;
  std::size_t header_len;
  if (major == 1) {
    header_start = 10;
    header_len = read_le(bytes.data() + 8, 2);
  } else {
    if (bytes.size() < 12) throw fail(NpyError::Code::bad_header, path, "header length cut off");
    header_start = 12;
    header_len = read_le(bytes.data() + 8, 4);
  }
  if (bytes.size() < header_start + header_len) {
    throw fail(NpyError::Code::bad_header, path, "header extends past end of file");
  }
  const std::string header(reinterpret_cast<const char*>(bytes.data()) + header_start, header_len);

  const std::string order = header_field(header, "fortran_order", path);
  if (order.find("True") != std::string::npos) {
    throw fail(NpyError::Code::fortran_order, path, "fortran-order payloads not supported");
  }
  if (order.find("False") == std::string::npos) {
    throw fail(NpyError::Code::bad_header, path, "unreadable fortran_order value");
  }

  std::string descr = header_field(header, "descr", path);
  descr.erase(std::remove(descr.begin(), descr.end(), '\''), descr.end());
  std::size_t elem_size;
  bool integer_payload = false;
  if (descr == "|u1" || descr == "<u1") {
    elem_size = 1;
    integer_payload = true;
  } else if (descr == "<f4") {
    elem_size = 4;
  } else if (descr == "<f8") {
    elem_size = 8;
  } else {
    throw fail(NpyError::Code::unsupported_dtype, path, "dtype " + descr);
  }

  const std::string shape_text = header_field(header, "shape", path);
  std::vector<int> shape;
  long current = -1;
  for (char c : shape_text) {
    if (c >= '0' && c <= '9') {
      current = (current < 0 ? 0 : current) * 10 + (c - '0');
    } else if (current >= 0) {
      shape.push_back(static_cast<int>(current));
      current = -1;
    }
  }
  if (current >= 0) shape.push_back(static_cast<int>(current));
  if (shape.size() != 3) {
    throw fail(NpyError::Code::bad_rank, path,
               "expected rank-3 (slices,H,W), got rank " + std::to_string(shape.size()));
  }
  for (int d : shape) {
    if (d <= 0) throw fail(NpyError::Code::bad_header, path, "non-positive dimension in shape");
  }

  const std::size_t count = static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) *
                            static_cast<std::size_t>(shape[2]);
  const std::size_t payload_start = header_start + header_len;
  const std::size_t payload_bytes = bytes.size() - payload_start;
  if (payload_bytes != count * elem_size) {
    throw fail(NpyError::Code::truncated, path,
               "payload holds " + std::to_string(payload_bytes) + " bytes, expected " +
                   std::to_string(count * elem_size));
  }

  std::vector<double> values(count);
  const unsigned char* payload = bytes.data() + payload_start;
  for (std::size_t i = 0; i < count; ++i) {
    if (elem_size == 1) {
      values[i] = static_cast<double>(payload[i]);
    } else if (elem_size == 4) {
      values[i] = float_from_le(payload + i * 4);
    } else {
      values[i] = double_from_le(payload + i * 8);
    }
  }
  normalize(values, integer_payload, path);

  Volume volume;
  volume.exam_id = path.stem().string();
  volume.slices = Tensor::from_data(shape, std::move(values));
  return volume;
}

void write_npy(const Tensor& slices, const std::filesystem::path& path) {
  if (!slices.defined() || slices.rank() != 3 || slices.numel() == 0) {
    throw DataError("write_npy: need a non-empty [slices,H,W] tensor" +
                    (slices.defined() ? ", got " + shape_str(slices.shape()) : std::string()));
  }

  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                     std::to_string(slices.dim(0)) + ", " + std::to_string(slices.dim(1)) + ", " +
                     std::to_string(slices.dim(2)) + "), }";
  // Pad with spaces so magic + version + length field + header is a multiple
  // of 64, newline-terminated per the format.
  const std::size_t preamble = 10;
  std::size_t total = preamble + dict.size() + 1;
  const std::size_t padded = (total + 63) / 64 * 64;
  dict.append(padded - total, ' ');
  dict.push_back('\n');

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_npy: cannot open " + path.string());
  out.write(kMagic, 6);
  out.put(static_cast<char>(1));
  out.put(static_cast<char>(0));
  const std::size_t header_len = dict.size();
  out.put(static_cast<char>(header_len & 0xff));
  out.put(static_cast<char>((header_len >> 8) & 0xff));
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));

  for (double v : slices.data()) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    char le[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                  static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(le, 4);
  }
  if (!out) throw DataError("write_npy: write failure on " + path.string());
}

}  // namespace sbssl
