#include "nextvisit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "nextvisit/io.hpp"

namespace nextvisit {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'V', 'C', 'K', 'P', 'T', 0, 0};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void put_bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > in_.size() - pos_) throw DataError("checkpoint: truncated string");
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_bytes(void* dst, std::size_t n) {
    if (n > in_.size() - pos_) throw DataError("checkpoint: truncated file");
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kVersion);
  const auto& c = ck.config;
  for (int v : {c.n_layer, c.n_head, c.n_embd, c.vocab_size, c.block_size}) w.put(static_cast<std::int32_t>(v));
  w.put(c.rope_base);
  w.put(c.rope_time_unit);
  w.put(static_cast<std::uint8_t>(c.bias));
  w.put(c.dropout);
  w.put(static_cast<std::uint8_t>(ck.objective));
  w.put_string(ck.vocab_hash);
  std::uint32_t count = 0;
  ck.params.for_each([&](const std::string&, const Mat<float>&) { ++count; });
  w.put(count);
  ck.params.for_each([&](const std::string& name, const Mat<float>& m) {
    w.put_string(name);
    w.put(static_cast<std::uint32_t>(m.rows()));
    w.put(static_cast<std::uint32_t>(m.cols()));
    w.put_bytes(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
  });
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("checkpoint: bad magic");
  if (auto v = r.get<std::uint32_t>(); v != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(v));
  Checkpoint ck;
  auto& c = ck.config;
  c.n_layer = r.get<std::int32_t>();
  c.n_head = r.get<std::int32_t>();
  c.n_embd = r.get<std::int32_t>();
  c.vocab_size = r.get<std::int32_t>();
  c.block_size = r.get<std::int32_t>();
  c.rope_base = r.get<double>();
  c.rope_time_unit = r.get<double>();
  c.bias = r.get<std::uint8_t>() != 0;
  c.dropout = r.get<double>();
  const auto obj = r.get<std::uint8_t>();
  if (obj > static_cast<std::uint8_t>(Objective::Ege)) throw DataError("checkpoint: bad objective tag");
  ck.objective = static_cast<Objective>(obj);
  ck.vocab_hash = r.get_string();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  std::map<std::string, Mat<float>> tensors;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
    Mat<float> m(rows, cols);
    r.get_bytes(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
    tensors.emplace(std::move(name), std::move(m));
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes");

  ck.params = ModelParams<float>::zeros(c);
  ck.params.for_each([&](const std::string& name, Mat<float>& m) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols())
      throw DataError("checkpoint: tensor '" + name + "' has the wrong shape");
    m = std::move(it->second);
  });
  return ck;
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected_vocab_hash) {
  Checkpoint ck = parse_checkpoint(read_file(path));
  if (ck.vocab_hash != expected_vocab_hash)
    throw ProvenanceError("checkpoint '" + path + "' was trained with vocabulary " + ck.vocab_hash +
                          ", not " + expected_vocab_hash);
  return ck;
}

}  // namespace nextvisit
