#include "flamegan/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "flamegan/error.hpp"

namespace flamegan::nn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out(kCheckpointMagic, 6);
  out.push_back(static_cast<char>(kCheckpointVersion));
  for (const NamedTensor& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t.value.values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 7 || bytes.compare(0, 6, kCheckpointMagic) != 0) {
    throw FormatError("not a FDGAN1 checkpoint");
  }
  if (static_cast<std::uint8_t>(bytes[6]) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(static_cast<unsigned char>(bytes[6])));
  }
  Reader reader(bytes);
  reader.take(7);
  std::vector<NamedTensor> tensors;
  while (!reader.done()) {
    NamedTensor t;
    t.name = reader.take(reader.u32());
    const std::uint32_t rank = reader.u32();
    Shape shape(rank);
    for (auto& d : shape) d = reader.u32();
    std::vector<float> values(shape_size(shape));
    for (float& f : values) f = std::bit_cast<float>(reader.u32());
    t.value = Tensor<float>(std::move(shape), std::move(values));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(tensors);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace flamegan::nn
