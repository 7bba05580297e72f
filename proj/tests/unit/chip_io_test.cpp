#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "diststn/chip_io.hpp"
#include "diststn/errors.hpp"
#include "oracles.hpp"

namespace diststn {
namespace {

using testing::TempDir;

TargetChip sample_chip() {
  TargetChip c;
  c.size = 16;
  c.class_id = 7;
  c.aspect_deg = 127.5f;
  c.depression_deg = 15.0f;
  c.image.resize(256);
  for (std::size_t i = 0; i < 256; ++i) c.image[i] = static_cast<float>(i) / 3.0f + 1e-30f;
  return c;
}

TEST(Chip, RoundtripIsBitExact) {
  const TargetChip c = sample_chip();
  const auto bytes = encode_chip(c);
  EXPECT_EQ(bytes.size(), 4u + 4 * 4 + 2 * 4 + 256 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SARC");
  const TargetChip d = decode_chip(bytes);
  EXPECT_EQ(d.size, c.size);
  EXPECT_EQ(d.class_id, c.class_id);
  EXPECT_EQ(d.aspect_deg, c.aspect_deg);
  EXPECT_EQ(d.depression_deg, c.depression_deg);
  EXPECT_EQ(std::memcmp(d.image.data(), c.image.data(), 256 * sizeof(float)), 0);
}

TEST(Chip, RejectsBadInput) {
  auto bytes = encode_chip(sample_chip());
  auto bad = bytes;
  bad[1] = 'X';
  try {
    decode_chip(bad);
    FAIL() << "bad magic accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_chip(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_chip(bad), FormatError);
  bad = bytes;
  bad[4] = 2;  // version
  EXPECT_THROW(decode_chip(bad), FormatError);
}

TEST(Chip, FileRoundtrip) {
  TempDir dir("chip");
  const TargetChip c = sample_chip();
  write_chip(c, dir.path() / "a" / "c.sarc");
  EXPECT_EQ(read_chip(dir.path() / "a" / "c.sarc").image, c.image);
  EXPECT_THROW(read_chip(dir.path() / "none.sarc"), IoError);
}

TEST(Manifest, RoundtripAndHeader) {
  TempDir dir("manifest");
  std::vector<ManifestRecord> recs{{"chips/a.sarc", 3, 12.5f, 17.0f}, {"chips/b.sarc", 0, 0.1f, 15.0f}};
  write_manifest(recs, dir.path() / "manifest.csv");
  std::ifstream in(dir.path() / "manifest.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "path,class_id,aspect_deg,depression_deg");
  const auto back = read_manifest(dir.path() / "manifest.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].path, "chips/a.sarc");
  EXPECT_EQ(back[1].aspect_deg, 0.1f);
  EXPECT_EQ(back[0].class_id, 3u);
}

TEST(Manifest, MalformedRowRejected) {
  TempDir dir("manifest_bad");
  std::ofstream(dir.path() / "manifest.csv") << "path,class_id,aspect_deg,depression_deg\nx.sarc,notanumber,1,2\n";
  EXPECT_THROW(read_manifest(dir.path() / "manifest.csv"), FormatError);
}

TEST(Dataset, WriteReadRoundtrip) {
  TempDir dir("dataset");
  DatasetOptions o;
  o.num_classes = 2;
  o.size = 16;
  o.angle_step_deg = 45.0;
  const auto chips = generate_dataset(o);
  const auto records = write_dataset(chips, dir.path());
  EXPECT_EQ(records.size(), chips.size());
  EXPECT_EQ(records[1].path, chip_relative_path(chips[1]));
  const Dataset back = read_dataset(dir.path());
  ASSERT_EQ(back.chips.size(), chips.size());
  for (std::size_t i = 0; i < chips.size(); ++i) {
    EXPECT_EQ(back.chips[i].image, chips[i].image);
    EXPECT_EQ(back.records[i].class_id, chips[i].class_id);
  }
}

TEST(Dataset, MetadataDisagreementRejected) {
  TempDir dir("dataset_bad");
  DatasetOptions o;
  o.num_classes = 2;
  o.size = 16;
  o.angle_step_deg = 90.0;
  auto chips = generate_dataset(o);
  auto records = write_dataset(chips, dir.path());
  records[0].class_id = 1;
  write_manifest(records, dir.path() / kManifestName);
  EXPECT_THROW(read_dataset(dir.path()), FormatError);
}

}  // namespace
}  // namespace diststn
