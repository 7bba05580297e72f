#include "diststn/chip_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "diststn/errors.hpp"

namespace diststn {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 28;
constexpr const char* kManifestHeader = "path,class_id,aspect_deg,depression_deg";

std::string format_float(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw FormatError(path.string() + ": bad field '" + field + "' on line " + std::to_string(line), line);
  }
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_chip(const TargetChip& chip) {
  if (chip.image.size() != static_cast<std::size_t>(chip.size) * chip.size) {
    throw ShapeMismatch("chip image has " + std::to_string(chip.image.size()) + " pixels for size " +
                        std::to_string(chip.size));
  }
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(chip.size);
  w.u32(chip.size);
  w.u32(chip.class_id);
  w.f32(chip.aspect_deg);
  w.f32(chip.depression_deg);
  for (float v : chip.image) w.f32(v);
  return w.buffer();
}

TargetChip decode_chip(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad chip magic", 0);
  r.str(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw FormatError("unsupported chip version " + std::to_string(version), 4);
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  if (h != w) throw FormatError("non-square chip " + std::to_string(h) + "x" + std::to_string(w), 8);
  TargetChip chip;
  chip.size = h;
  chip.class_id = r.u32("class id");
  chip.aspect_deg = r.f32("aspect");
  chip.depression_deg = r.f32("depression");
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  if (r.remaining() != pixels * 4) {
    throw FormatError("chip payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(pixels * 4),
                      kHeaderBytes);
  }
  chip.image.resize(pixels);
  for (float& v : chip.image) v = r.f32("pixel");
  return chip;
}

void write_chip(const TargetChip& chip, const std::filesystem::path& path) {
  detail::write_file(path, encode_chip(chip));
}

TargetChip read_chip(const std::filesystem::path& path) { return decode_chip(detail::read_file(path)); }

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::ostringstream os;
  os << kManifestHeader << '\n';
  for (const auto& r : records) {
    os << r.path << ',' << r.class_id << ',' << format_float(r.aspect_deg) << ',' << format_float(r.depression_deg)
       << '\n';
  }
  const std::string text = os.str();
  detail::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError(path.string() + ": missing manifest header", 0);
  }
  std::vector<ManifestRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw FormatError(path.string() + ": expected 4 fields on line " + std::to_string(line_no), line_no);
    }
    ManifestRecord r;
    r.path = fields[0];
    r.class_id = parse_field<std::uint32_t>(fields[1], path, line_no);
    r.aspect_deg = parse_field<float>(fields[2], path, line_no);
    r.depression_deg = parse_field<float>(fields[3], path, line_no);
    out.push_back(std::move(r));
  }
  return out;
}

std::string chip_relative_path(const TargetChip& chip) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "chips/dep%02d/class%02u_az%06.2f.sarc",
                static_cast<int>(std::lround(chip.depression_deg)), chip.class_id,
                static_cast<double>(chip.aspect_deg));
  return buf;
}

std::vector<ManifestRecord> write_dataset(const std::vector<TargetChip>& chips, const std::filesystem::path& dir) {
  std::vector<ManifestRecord> records;
  records.reserve(chips.size());
  for (const auto& chip : chips) {
    ManifestRecord r{chip_relative_path(chip), chip.class_id, chip.aspect_deg, chip.depression_deg};
    write_chip(chip, dir / r.path);
    records.push_back(std::move(r));
  }
  write_manifest(records, dir / kManifestName);
  return records;
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.records = read_manifest(dir / kManifestName);
  ds.chips.reserve(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    TargetChip chip = read_chip(dir / r.path);
    if (chip.class_id != r.class_id || chip.aspect_deg != r.aspect_deg || chip.depression_deg != r.depression_deg) {
      throw FormatError("chip " + r.path + " disagrees with its manifest record", i + 2);
    }
    ds.chips.push_back(std::move(chip));
  }
  return ds;
}

}  // namespace diststn
