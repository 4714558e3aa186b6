#include "rondo/nn/weights.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "rondo/rng.hpp"

namespace rondo::nn {

std::string network_config_text(const NetworkConfig& c) {
  std::ostringstream os;
  os << "input_size " << c.input_size << " in_channels " << c.in_channels << " adapter " << c.adapter_channels
     << " stages";
  for (const int s : c.stage_channels) os << ' ' << s;
  os << " ; latent " << c.latent_channels << " head " << c.head_channels << " hidden " << c.hidden << " pred_hidden "
     << c.pred_hidden;
  return os.str();
}

NetworkConfig parse_network_config(const std::string& text) {
  std::istringstream is(text);
  NetworkConfig c;
  std::string key;
  auto expect = [&](const char* name, int& v) {
    if (!(is >> key) || key != name || !(is >> v)) throw WeightError(std::string("bad network config near '") + name + "'");
  };
  expect("input_size", c.input_size);
  expect("in_channels", c.in_channels);
  expect("adapter", c.adapter_channels);
  if (!(is >> key) || key != "stages") throw WeightError("bad network config near 'stages'");
  c.stage_channels.clear();
  while (is >> key && key != ";") c.stage_channels.push_back(std::stoi(key));
  expect("latent", c.latent_channels);
  expect("head", c.head_channels);
  expect("hidden", c.hidden);
  expect("pred_hidden", c.pred_hidden);
  return c;
}

namespace {

constexpr char kMagic[8] = {'R', 'O', 'N', 'D', 'O', 'W', 'T', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_text(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

std::uint64_t checksum(const std::vector<float>& v) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)));
}

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) fail("truncated");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string text() {
    const auto n = get<std::uint32_t>();
    if (n > 1u << 20 || pos_ + n > b_.size()) fail("bad string length");
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* dst, std::size_t n) {
    if (pos_ + n > b_.size()) fail("truncated tensor data");
    std::memcpy(dst, b_.data() + pos_, n);
    pos_ += n;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw WeightError("weight file error at byte " + std::to_string(pos_) + ": " + msg);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_weights(const Network<float>& net, const WeightMeta& meta) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kWeightVersion);
  put_text(out, network_config_text(net.config()));
  put_text(out, meta.config_hash);
  put<std::uint64_t>(out, meta.seed);
  put_text(out, meta.code_version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.params().size()));
  for (const Param<float>& p : net.params()) {
    put_text(out, p.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape.size()));
    for (const int d : p.shape) put<std::int32_t>(out, d);
    put<std::uint64_t>(out, checksum(p.value));
  }
  for (const Param<float>& p : net.params())
    out.append(reinterpret_cast<const char*>(p.value.data()), p.value.size() * sizeof(float));
  return out;
}

Network<float> decode_weights(const std::string& bytes, WeightMeta* meta) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw WeightError("weight file error at byte 0: bad magic header");
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightVersion) r.fail("unsupported version " + std::to_string(version));
  Network<float> net(parse_network_config(r.text()));
  WeightMeta m;
  m.config_hash = r.text();
  m.seed = r.get<std::uint64_t>();
  m.code_version = r.text();
  const auto count = r.get<std::uint32_t>();
  if (count != net.params().size()) r.fail("parameter count does not match the network");
  std::vector<std::uint64_t> sums(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Param<float>& p = net.params()[i];
    const std::string name = r.text();
    if (name != p.name) r.fail("expected tensor " + p.name + ", found " + name);
    const auto rank = r.get<std::uint32_t>();
    if (rank != p.shape.size()) r.fail("rank mismatch for " + name);
    for (std::uint32_t d = 0; d < rank; ++d)
      if (r.get<std::int32_t>() != p.shape[d]) r.fail("shape mismatch for " + name);
    sums[i] = r.get<std::uint64_t>();
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    Param<float>& p = net.params()[i];
    r.raw(p.value.data(), p.value.size() * sizeof(float));
    if (checksum(p.value) != sums[i]) r.fail("checksum mismatch for " + p.name);
  }
  if (!r.done()) r.fail("trailing bytes");
  if (meta) *meta = m;
  return net;
}

void save_weights(const Network<float>& net, const WeightMeta& meta, const std::string& path) {
  const std::string bytes = encode_weights(net, meta);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw WeightError("cannot write " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw WeightError("write failed for " + path);
}

Network<float> load_weights(const std::string& path, WeightMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WeightError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_weights(ss.str(), meta);
}

}  // namespace rondo::nn
