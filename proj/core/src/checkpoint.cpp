#include "diststn/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <limits>
#include <map>

#include "binary_io.hpp"
#include "diststn/errors.hpp"

namespace diststn {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

namespace {

constexpr char kMagic[4] = {'D', 'S', 'T', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kConfigName = "model.config";

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> encode_tensor_archive(const NamedTensors& tensors) {
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw InvalidArgument("tensor name too long");
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw InvalidArgument("tensor rank too large");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  }
  const auto& buf = w.buffer();
  w.u32(crc32_of(buf.data(), buf.size()));
  return w.buffer();
}

NamedTensors decode_tensor_archive(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) throw FormatError("checkpoint too short", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader crc_reader(bytes.data() + body, 4);
  const std::uint32_t stored = crc_reader.u32("crc");
  if (stored != crc32_of(bytes.data(), body)) throw FormatError("checkpoint CRC mismatch", body);

  detail::ByteReader r(bytes.data(), body);
  r.str(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("tensor count");
  NamedTensors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint16_t len = r.u16("name length");
    std::string name = r.str(len, "tensor name");
    const std::uint8_t ndim = r.u8("rank");
    const std::size_t dims_at = r.offset();
    Shape shape;
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const std::uint32_t dim = r.u32("dimension");
      if (dim == 0) throw FormatError("zero dimension in tensor " + name, dims_at);
      shape.push_back(dim);
      n *= dim;
    }
    r.expect(n * 8, "tensor values");
    std::vector<double> values(n);
    for (double& v : values) v = r.f64("value");
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after tensors", r.offset());
  return out;
}

void save_checkpoint(const DistStnModel& model, const std::filesystem::path& path) {
  const ModelConfig& c = model.config();
  NamedTensors tensors;
  tensors.emplace_back(kConfigName, Tensor({8}, std::vector<double>{
                                                    static_cast<double>(c.image_size),
                                                    static_cast<double>(c.num_classes),
                                                    static_cast<double>(c.conv1_channels),
                                                    static_cast<double>(c.conv2_channels),
                                                    static_cast<double>(c.identity_channels),
                                                    static_cast<double>(c.pose_channels),
                                                    model.loss_weights().alpha,
                                                    model.loss_weights().beta,
                                                }));
  for (auto& named : model.named_parameters()) tensors.push_back(std::move(named));
  detail::write_file(path, encode_tensor_archive(tensors));
}

DistStnModel load_checkpoint(const std::filesystem::path& path) {
  NamedTensors tensors = decode_tensor_archive(detail::read_file(path));
  if (tensors.empty() || tensors.front().first != kConfigName || tensors.front().second.size() != 8) {
    throw FormatError("checkpoint lacks a model.config record", 12);
  }
  const Tensor& cfg = tensors.front().second;
  ModelConfig c;
  c.image_size = static_cast<std::size_t>(cfg[0]);
  c.num_classes = static_cast<std::size_t>(cfg[1]);
  c.conv1_channels = static_cast<std::size_t>(cfg[2]);
  c.conv2_channels = static_cast<std::size_t>(cfg[3]);
  c.identity_channels = static_cast<std::size_t>(cfg[4]);
  c.pose_channels = static_cast<std::size_t>(cfg[5]);
  auto model = [&] {
    try {
      return DistStnModel(c, 0);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("invalid model.config: ") + e.what(), 12);
    }
  }();
  model.loss_weights() = {cfg[6], cfg[7]};

  std::map<std::string, Tensor> by_name(tensors.begin() + 1, tensors.end());
  std::size_t used = 0;
  for (auto& [name, t] : model.named_parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks tensor " + name, 0);
    if (it->second.shape() != t.shape()) {
      throw FormatError("tensor " + name + " has shape " + shape_to_string(it->second.shape()) + ", expected " +
                            shape_to_string(t.shape()),
                        0);
    }
    Tensor dst = t;
    std::copy(it->second.data().begin(), it->second.data().end(), dst.data().begin());
    ++used;
  }
  if (used != by_name.size()) throw FormatError("checkpoint has unexpected tensors", 0);
  return model;
}

}  // namespace diststn
