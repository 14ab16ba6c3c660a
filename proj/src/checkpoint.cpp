#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "salreg/error.hpp"
#include "salreg/tinynet.hpp"

namespace salreg::tinynet {

namespace {

constexpr char kMagic[] = {'T', 'N', 'E', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ParseError("truncated checkpoint", bytes_.size());
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void append(std::vector<std::uint8_t>& out, const std::string& prefix, const TensorMap& tensors) {
  for (const auto& [name, t] : tensors) {
    const std::string full = prefix + name;
    put_u32(out, static_cast<std::uint32_t>(full.size()));
    out.insert(out.end(), full.begin(), full.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const TinyNetParams& params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append(out, "trunk.", params.trunk);
  append(out, "seg.", params.seg_head);
  append(out, "sal.", params.sal_head);
  return out;
}

TinyNetParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ParseError("missing TNET1 magic", 0);
  Reader r(bytes.subspan(sizeof(kMagic)));
  TinyNetParams p;
  while (!r.done()) {
    const std::size_t start = r.pos() + sizeof(kMagic);
    const auto name_len = r.uint(4);
    if (name_len > 4096) throw ParseError("implausible tensor name length", start);
    const std::string name = r.text(name_len);
    const auto rank = r.uint(4);
    if (rank > 8) throw ParseError("implausible tensor rank", start);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = r.uint(8);
      if (d > (std::size_t{1} << 28)) throw ParseError("implausible tensor dimension", start);
      count *= d;
    }
    std::vector<double> values(count);
    for (double& v : values) v = std::bit_cast<double>(r.uint(8));

    TensorMap* target = nullptr;
    std::string local;
    for (auto [prefix, map] : {std::pair{"trunk.", &p.trunk}, std::pair{"seg.", &p.seg_head},
                               std::pair{"sal.", &p.sal_head}}) {
      const std::string pre(prefix);
      if (name.rfind(pre, 0) == 0) {
        target = map;
        local = name.substr(pre.size());
      }
    }
    if (!target) throw ParseError("tensor name without trunk./seg./sal. prefix: " + name, start);
    target->insert_or_assign(local, Tensor(std::move(shape), std::move(values)));
  }
  for (const char* required : {"conv1.weight", "conv2.weight", "conv3.weight"})
    if (!p.trunk.count(required)) throw ParseError(std::string("checkpoint lacks trunk.") + required, bytes.size());
  for (const TensorMap* head : {&p.seg_head, &p.sal_head})
    for (const char* required : {"score.weight", "score.bias", "up.kernel"})
      if (!head->count(required)) throw ParseError(std::string("checkpoint lacks head tensor ") + required, bytes.size());
  return p;
}

void save_checkpoint(const TinyNetParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

TinyNetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace salreg::tinynet
