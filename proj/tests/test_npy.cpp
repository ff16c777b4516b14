#include "sbssl/npy.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sbssl/errors.hpp"
#include "sbssl/rng.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sbssl_npy_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Builds a container byte-by-byte so the reader is exercised against the
// format itself, not against our own writer.
std::vector<unsigned char> build_npy(const std::string& dict, const std::vector<unsigned char>& payload,
                                     int major = 1, int minor = 0) {
  std::vector<unsigned char> bytes = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  bytes.push_back(static_cast<unsigned char>(major));
  bytes.push_back(static_cast<unsigned char>(minor));
  std::string header = dict;
  header.push_back('\n');
  if (major >= 2) {
    const std::uint32_t len = static_cast<std::uint32_t>(header.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((len >> (8 * i)) & 0xff));
  } else {
    const std::uint16_t len = static_cast<std::uint16_t>(header.size());
    bytes.push_back(static_cast<unsigned char>(len & 0xff));
    bytes.push_back(static_cast<unsigned char>(len >> 8));
  }
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

std::filesystem::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
  const auto path = temp_file(name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return path;
}

std::vector<unsigned char> float_payload(const std::vector<float>& values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &values[i], 4);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
  }
  return bytes;
}

NpyError::Code code_of(const std::filesystem::path& path) {
  try {
    read_npy(path);
  } catch (const NpyError& e) {
    return e.code;
  }
  throw std::logic_error("expected NpyError for " + path.string());
}

TEST(NpyRead, HandWrittenUint8ScalesBy255) {
  const auto path = write_bytes(
      "u8.npy", build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 2, 2), }",
                          {0, 255, 128, 64}));
  const Volume v = read_npy(path);
  EXPECT_EQ(v.slice_count(), 1);
  EXPECT_EQ(v.height(), 2);
  EXPECT_EQ(v.width(), 2);
  EXPECT_DOUBLE_EQ(v.slices.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(v.slices.data()[1], 1.0);
  EXPECT_NEAR(v.slices.data()[2], 0.50196, 1e-5);
  EXPECT_NEAR(v.slices.data()[3], 0.25098, 1e-5);
  EXPECT_EQ(v.exam_id, "u8");
}

TEST(NpyRead, Version2HeaderLengthIsFourBytes) {
  const auto path = write_bytes(
      "v2.npy", build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 1, 2), }",
                          {10, 20}, /*major=*/2));
  const Volume v = read_npy(path);
  EXPECT_NEAR(v.slices.data()[0], 10.0 / 255.0, 1e-12);
  EXPECT_NEAR(v.slices.data()[1], 20.0 / 255.0, 1e-12);
}

TEST(NpyRead, FloatPayloadInsideUnitRangePassesThrough) {
  const auto path = write_bytes(
      "f4.npy", build_npy("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 3), }",
                          float_payload({0.0f, 0.25f, 1.0f})));
  const Volume v = read_npy(path);
  EXPECT_DOUBLE_EQ(v.slices.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(v.slices.data()[1], 0.25);
  EXPECT_DOUBLE_EQ(v.slices.data()[2], 1.0);
}

TEST(NpyRead, FloatPayloadOutsideUnitRangeIsMinMaxNormalized) {
  const auto path = write_bytes(
      "wide.npy", build_npy("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 3), }",
                            float_payload({-5.0f, 0.0f, 15.0f})));
  const Volume v = read_npy(path);
  EXPECT_DOUBLE_EQ(v.slices.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(v.slices.data()[1], 0.25);
  EXPECT_DOUBLE_EQ(v.slices.data()[2], 1.0);
}

TEST(NpyRead, ConstantOutOfRangeVolumeMapsToZeros) {
  const auto path = write_bytes(
      "const.npy", build_npy("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 2), }",
                             float_payload({7.0f, 7.0f})));
  const Volume v = read_npy(path);
  EXPECT_DOUBLE_EQ(v.slices.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(v.slices.data()[1], 0.0);
}

TEST(NpyRead, Float64PayloadIsAccepted) {
  // 0.5 in IEEE little-endian float64.
  std::vector<unsigned char> payload(8, 0);
  const double half = 0.5;
  std::uint64_t bits;
  std::memcpy(&bits, &half, 8);
  for (int b = 0; b < 8; ++b) payload[static_cast<std::size_t>(b)] =
      static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
  const auto path = write_bytes(
      "f8.npy", build_npy("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1), }", payload));
  EXPECT_DOUBLE_EQ(read_npy(path).slices.data()[0], 0.5);
}

TEST(NpyRead, EachDefectRaisesItsOwnCode) {
  EXPECT_EQ(code_of(temp_file("does_not_exist.npy")), NpyError::Code::io);

  auto bad_magic = build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 1, 1), }", {1});
  bad_magic[0] = 0x00;
  EXPECT_EQ(code_of(write_bytes("bad_magic.npy", bad_magic)), NpyError::Code::bad_magic);

  EXPECT_EQ(code_of(write_bytes(
                "bad_version.npy",
                build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 1, 1), }", {1},
                          /*major=*/3))),
            NpyError::Code::bad_version);

  EXPECT_EQ(code_of(write_bytes(
                "fortran.npy",
                build_npy("{'descr': '|u1', 'fortran_order': True, 'shape': (1, 1, 1), }", {1}))),
            NpyError::Code::fortran_order);

  EXPECT_EQ(code_of(write_bytes(
                "dtype.npy",
                build_npy("{'descr': '<i4', 'fortran_order': False, 'shape': (1, 1, 1), }",
                          {1, 0, 0, 0}))),
            NpyError::Code::unsupported_dtype);

  EXPECT_EQ(code_of(write_bytes(
                "rank.npy",
                build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (2, 2), }",
                          {1, 2, 3, 4}))),
            NpyError::Code::bad_rank);

  EXPECT_EQ(code_of(write_bytes(
                "short.npy",
                build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 2, 2), }",
                          {1, 2, 3}))),
            NpyError::Code::truncated);

  EXPECT_EQ(code_of(write_bytes(
                "no_keys.npy", build_npy("{'shape': (1, 1, 1), }", {1}))),
            NpyError::Code::bad_header);

  const float inf = std::numeric_limits<float>::infinity();
  EXPECT_EQ(code_of(write_bytes(
                "inf.npy",
                build_npy("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1, 1), }",
                          float_payload({inf})))),
            NpyError::Code::non_finite);
}

TEST(NpyRead, ExtraPayloadBytesAreRejected) {
  EXPECT_EQ(code_of(write_bytes(
                "long.npy",
                build_npy("{'descr': '|u1', 'fortran_order': False, 'shape': (1, 1, 2), }",
                          {1, 2, 3}))),
            NpyError::Code::truncated);
}

TEST(NpyWrite, RoundTripIsIdentityOnFloat32Volumes) {
  Rng rng(41);
  std::vector<double> values(3 * 5 * 4);
  for (double& v : values) v = static_cast<double>(static_cast<float>(rng.uniform()));
  const Tensor slices = Tensor::from_data({3, 5, 4}, values);
  const auto path = temp_file("roundtrip.npy");
  write_npy(slices, path);
  const Volume back = read_npy(path);
  ASSERT_EQ(back.slices.shape(), slices.shape());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(back.slices.data()[i], values[i]) << "at flat index " << i;
  }
}

TEST(NpyWrite, HeaderIsPaddedTo64ByteBoundary) {
  const auto path = temp_file("aligned.npy");
  write_npy(Tensor::from_data({1, 2, 2}, {0.0, 0.25, 0.5, 1.0}), path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  ASSERT_GE(bytes.size(), 10u);
  const std::size_t header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  EXPECT_EQ(bytes[10 + header_len - 1], '\n');
  EXPECT_EQ(bytes.size(), 10 + header_len + 4 * 4);
}

TEST(NpyWrite, RejectsEmptyAndWrongRank) {
  const auto path = temp_file("reject.npy");
  EXPECT_THROW(write_npy(Tensor(), path), DataError);
  EXPECT_THROW(write_npy(Tensor::zeros({2, 2}), path), DataError);
}

TEST(NpyWrite, ProducesFilesNumpyToolingWouldAccept) {
  // Spot-check the exact preamble our writer emits.
  const auto path = temp_file("preamble.npy");
  write_npy(Tensor::from_data({1, 1, 1}, {0.5}), path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(bytes[0], 0x93);
  EXPECT_EQ(std::string(bytes.begin() + 1, bytes.begin() + 6), "NUMPY");
  EXPECT_EQ(bytes[6], 1);  // version 1.0
  EXPECT_EQ(bytes[7], 0);
  const std::string header(bytes.begin() + 10,
                           bytes.begin() + 10 + (bytes[8] | (bytes[9] << 8)));
  EXPECT_NE(header.find("'descr': '<f4'"), std::string::npos);
  EXPECT_NE(header.find("'fortran_order': False"), std::string::npos);
  EXPECT_NE(header.find("'shape': (1, 1, 1)"), std::string::npos);
}

}  // namespace
}  // namespace sbssl
