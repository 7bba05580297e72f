#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "diststn/checkpoint.hpp"
#include "diststn/errors.hpp"
#include "oracles.hpp"

namespace diststn {
namespace {

using testing::TempDir;

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(TensorArchive, RoundtripIsBitExact) {
  std::mt19937_64 rng(1);
  NamedTensors in{{"a", testing::random_tensor({2, 3}, rng)},
                  {"b.c", Tensor::vector({std::nextafter(1.0, 2.0), -0.0, 1e-308})}};
  const auto out = decode_tensor_archive(encode_tensor_archive(in));
  ASSERT_EQ(out.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(out[k].first, in[k].first);
    EXPECT_EQ(out[k].second.shape(), in[k].second.shape());
    EXPECT_EQ(std::memcmp(out[k].second.data().data(), in[k].second.data().data(), in[k].second.size() * 8), 0);
  }
}

TEST(TensorArchive, LayoutHeader) {
  const auto bytes = encode_tensor_archive({{"x", Tensor::vector({1.0})}});
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DSTN");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], 1);  // count
  // 4 + 4 + 4 + (2 + 1 + 1 + 4 + 8) + 4
  EXPECT_EQ(bytes.size(), 32u);
}

TEST(TensorArchive, RejectsCorruption) {
  auto bytes = encode_tensor_archive({{"x", Tensor::vector({1.0, 2.0})}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    decode_tensor_archive(bad_magic);
    FAIL() << "bad magic accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto flipped = bytes;
  flipped[20] ^= 0x01;
  EXPECT_THROW(decode_tensor_archive(flipped), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_THROW(decode_tensor_archive(truncated), FormatError);
  auto bad_crc = bytes;
  bad_crc.back() ^= 0x80;
  EXPECT_THROW(decode_tensor_archive(bad_crc), FormatError);
}

TEST(Checkpoint, ModelRoundtripIsBitExact) {
  TempDir dir("ckpt");
  ModelConfig c = ModelConfig::tiny(5);
  DistStnModel m(c, 77);
  m.loss_weights() = {0.5, 2.0};
  Tensor bias = m.param("pose", "fc3.bias");
  bias[2] = 0.123456789;
  const auto path = dir.path() / "sub" / "m.ckpt";
  save_checkpoint(m, path);
  const DistStnModel back = load_checkpoint(path);
  EXPECT_EQ(back.config().num_classes, 5u);
  EXPECT_EQ(back.config().image_size, 16u);
  EXPECT_EQ(back.loss_weights().alpha, 0.5);
  EXPECT_EQ(back.loss_weights().beta, 2.0);
  const auto a = m.named_parameters(), b = back.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    for (std::size_t k = 0; k < a[i].second.size(); ++k) ASSERT_EQ(a[i].second[k], b[i].second[k]) << a[i].first;
  }
  // Saving the reloaded model reproduces the file byte for byte.
  save_checkpoint(back, dir.path() / "again.ckpt");
  EXPECT_EQ(slurp(path), slurp(dir.path() / "again.ckpt"));
}

TEST(Checkpoint, CorruptFileRejected) {
  TempDir dir("ckpt_bad");
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(DistStnModel(ModelConfig::tiny(), 1), path);
  auto bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x10;
  dump(path, bytes);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), IoError);
}

TEST(Checkpoint, MissingParameterRejected) {
  TempDir dir("ckpt_missing");
  DistStnModel m(ModelConfig::tiny(), 1);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(m, path);
  auto tensors = decode_tensor_archive(slurp(path));
  tensors.pop_back();
  dump(path, encode_tensor_archive(tensors));
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

}  // namespace
}  // namespace diststn
