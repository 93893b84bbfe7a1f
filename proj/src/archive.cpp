#include "csisense/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "csisense/errors.hpp"

namespace csisense {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'M', 'A'};

class Writer {
 public:
  std::string buf;

  void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf.append(s);
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void i32s(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }
  void strs(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(*p_++);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p_[i])) << (8 * i);
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[i])) << (8 * i);
    p_ += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  std::vector<double> f64s() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<int> i32s() {
    const std::uint64_t n = u64();
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }
  std::vector<std::string> strs() {
    const std::uint64_t n = u64();
    std::vector<std::string> v(n);
    for (auto& s : v) s = str();
    return v;
  }
  bool exhausted() const { return p_ == end_; }

 private:
  void need(std::uint64_t n) {
    if (static_cast<std::uint64_t>(end_ - p_) < n) throw ArchiveError("archive truncated");
  }
  const char* p_;
  const char* end_;
};

void write_bank(Writer& w, const FittedBank& b) {
  w.i32(b.config.kernel_length);
  w.i32(b.config.num_kernels);
  w.i32(b.config.max_dilations_per_kernel);
  w.i32(b.config.total_features);
  w.u64(b.config.seed);
  w.i32(b.plan.input_length);
  w.u64(b.plan.per_kernel.size());
  for (const auto& steps : b.plan.per_kernel) {
    w.u64(steps.size());
    for (const DilationStep& s : steps) {
      w.i32(s.dilation);
      w.u8(s.padded ? 1 : 0);
      w.i32(s.num_biases);
    }
  }
  w.u64(b.kernels.size());
  for (const Kernel& k : b.kernels) w.i32s(k.weights);
  w.u64(b.biases.size());
  for (const auto& bias : b.biases) w.f64s(bias);
  w.i32(b.subcarriers);
}

FittedBank read_bank(Reader& r) {
  FittedBank b;
  b.config.kernel_length = r.i32();
  b.config.num_kernels = r.i32();
  b.config.max_dilations_per_kernel = r.i32();
  b.config.total_features = r.i32();
  b.config.seed = r.u64();
  b.plan.input_length = r.i32();
  b.plan.per_kernel.resize(r.u64());
  for (auto& steps : b.plan.per_kernel) {
    steps.resize(r.u64());
    for (DilationStep& s : steps) {
      s.dilation = r.i32();
      s.padded = r.u8() != 0;
      s.num_biases = r.i32();
    }
  }
  b.kernels.resize(r.u64());
  for (Kernel& k : b.kernels) k.weights = r.i32s();
  b.biases.resize(r.u64());
  for (auto& bias : b.biases) bias = r.f64s();
  b.subcarriers = r.i32();
  return b;
}

void write_head(Writer& w, const RidgeModel& m) {
  w.i32s(m.class_labels);
  w.i32(m.weights.rows);
  w.i32(m.weights.cols);
  w.f64s(m.weights.data);
  w.f64s(m.intercepts);
  w.f64s(m.feature_means);
  w.f64s(m.feature_scales);
  w.f64(m.alpha);
}

RidgeModel read_head(Reader& r) {
  RidgeModel m;
  m.class_labels = r.i32s();
  const int rows = r.i32();
  const int cols = r.i32();
  m.weights = Matrix(rows, cols);
  m.weights.data = r.f64s();
  if (m.weights.data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw ArchiveError("weight payload size mismatch");
  m.intercepts = r.f64s();
  m.feature_means = r.f64s();
  m.feature_scales = r.f64s();
  m.alpha = r.f64();
  return m;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_model(const std::filesystem::path& path, const FusionModel& model,
                const RunConfig& config) {
  Writer payload;
  payload.str(run_config_to_json(config));
  payload.u8(static_cast<std::uint8_t>(model.topology));
  payload.i32s(model.ap_ids);
  payload.strs(model.activity_names);
  payload.strs(model.orientation_names);
  payload.u64(model.banks.size());
  for (const FittedBank& b : model.banks) write_bank(payload, b);
  payload.u64(model.activity_heads.size());
  for (const RidgeModel& h : model.activity_heads) write_head(payload, h);
  payload.u64(model.orientation_heads.size());
  for (const RidgeModel& h : model.orientation_heads) write_head(payload, h);

  Writer header;
  header.buf.append(kMagic, 4);
  header.u32(kArchiveMajor);
  header.u32(kArchiveMinor);
  header.u64(payload.buf.size());
  header.u64(fnv1a64(payload.buf.data(), payload.buf.size()));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(header.buf.data(), static_cast<std::streamsize>(header.buf.size()));
    f.write(payload.buf.data(), static_cast<std::streamsize>(payload.buf.size()));
    if (!f) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open archive " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 28 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ArchiveError(path.string() + " is not a csisense model archive");
  Reader head(bytes.data() + 4, bytes.size() - 4);
  const std::uint32_t major = head.u32();
  const std::uint32_t minor = head.u32();
  (void)minor;
  if (major > kArchiveMajor)
    throw ArchiveError("archive format version " + std::to_string(major) +
                       " is newer than supported " + std::to_string(kArchiveMajor));
  const std::uint64_t payload_len = head.u64();
  const std::uint64_t checksum = head.u64();
  if (bytes.size() - 28 != payload_len) throw ArchiveError("archive payload length mismatch");
  if (fnv1a64(bytes.data() + 28, payload_len) != checksum)
    throw ArchiveError("archive checksum mismatch (corrupted payload)");

  Reader r(bytes.data() + 28, payload_len);
  LoadedModel out;
  out.config_json = r.str();
  out.config = run_config_from_json(out.config_json);
  const std::uint8_t topo = r.u8();
  if (topo > 2) throw ArchiveError("bad topology tag");
  out.model.topology = static_cast<Topology>(topo);
  out.model.ap_ids = r.i32s();
  out.model.activity_names = r.strs();
  out.model.orientation_names = r.strs();
  out.model.banks.resize(r.u64());
  for (auto& b : out.model.banks) b = read_bank(r);
  out.model.activity_heads.resize(r.u64());
  for (auto& h : out.model.activity_heads) h = read_head(r);
  out.model.orientation_heads.resize(r.u64());
  for (auto& h : out.model.orientation_heads) h = read_head(r);
  if (!r.exhausted()) throw ArchiveError("trailing bytes after archive payload");
  return out;
}

}  // namespace csisense
