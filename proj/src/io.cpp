#include "waveformer/io.hpp"

#include <cstring>
#include <fstream>

#include "waveformer/fft.hpp"

namespace wf {

namespace {

// explicit little-endian encoding, independent of host byte order

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void f64_block(double* dst, size_t count) {
    need(8 * count);
    for (size_t i = 0; i < count; ++i) dst[i] = f64_at(pos_ + 8 * i);
    pos_ += 8 * count;
  }
  void expect_magic(const char* magic) {
    need(4);
    if (bytes_.compare(pos_, 4, magic) != 0)
      raise(errc::io_error, path_ + ": bad magic, expected " + magic);
    pos_ += 4;
  }
  size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& path() const { return path_; }

 private:
  double f64_at(size_t at) const {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[at + b])) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void need(size_t n) {
    if (pos_ + n > bytes_.size()) raise(errc::io_error, path_ + ": truncated file");
  }
  std::string bytes_;
  std::string path_;
  size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(errc::io_error, "cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(errc::io_error, "cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) raise(errc::io_error, "short write to " + path);
}

constexpr uint32_t kFormatVersion = 1;

}  // namespace

void write_dataset(const std::string& path, const TrajectoryDataset& ds) {
  const int64_t expect = ds.samples * ds.timesteps * ds.grid.points();
  if (static_cast<int64_t>(ds.payload.size()) != expect)
    raise(errc::shape_mismatch, "dataset payload does not match header");
  std::string out;
  out.reserve(128 + ds.params_text.size() + 8 * ds.payload.size());
  out.append("WFDS");
  put_u32(out, kFormatVersion);
  put_str(out, ds.pde);
  put_u32(out, static_cast<uint32_t>(ds.grid.dim));
  for (int64_t e : ds.grid.extents) put_u32(out, static_cast<uint32_t>(e));
  for (double l : ds.grid.lengths) put_f64(out, l);
  put_u32(out, static_cast<uint32_t>(ds.samples));
  put_u32(out, static_cast<uint32_t>(ds.timesteps));
  put_f64(out, ds.dt_stored);
  put_str(out, ds.params_text);
  out.push_back(ds.paper_scale ? 1 : 0);
  put_u64(out, ds.seed);
  for (double v : ds.payload) put_f64(out, v);
  spit(path, out);
}

TrajectoryDataset read_dataset(const std::string& path) {
  Reader r(slurp(path), path);
  r.expect_magic("WFDS");
  const uint32_t version = r.u32();
  if (version != kFormatVersion)
    raise(errc::io_error, path + ": unsupported dataset version " + std::to_string(version));
  TrajectoryDataset ds;
  ds.pde = r.str();
  ds.grid.dim = static_cast<int>(r.u32());
  if (ds.grid.dim != 1 && ds.grid.dim != 2)
    raise(errc::io_error, path + ": bad grid dimension");
  ds.grid.extents.resize(ds.grid.dim);
  for (auto& e : ds.grid.extents) e = r.u32();
  ds.grid.lengths.resize(ds.grid.dim);
  for (auto& l : ds.grid.lengths) l = r.f64();
  ds.samples = r.u32();
  ds.timesteps = r.u32();
  ds.dt_stored = r.f64();
  ds.params_text = r.str();
  ds.paper_scale = r.u8() != 0;
  ds.seed = r.u64();
  const int64_t count = ds.samples * ds.timesteps * ds.grid.points();
  if (r.remaining() != static_cast<size_t>(count) * 8)
    raise(errc::io_error, path + ": payload size does not match header");
  ds.payload.resize(count);
  r.f64_block(ds.payload.data(), ds.payload.size());
  return ds;
}

void write_checkpoint(const std::string& path, const std::string& config_text,
                      const ParamStore& params) {
  std::string out;
  out.append("WFCK");
  put_u32(out, kFormatVersion);
  put_str(out, config_text);
  put_u32(out, static_cast<uint32_t>(params.items().size()));
  for (const auto& [name, t] : params.items()) {
    put_str(out, name);
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (int64_t e : t.shape()) put_u32(out, static_cast<uint32_t>(e));
  }
  for (const auto& [name, t] : params.items())
    for (double v : t.data()) put_f64(out, v);
  spit(path, out);
}

Checkpoint read_checkpoint(const std::string& path) {
  Reader r(slurp(path), path);
  r.expect_magic("WFCK");
  const uint32_t version = r.u32();
  if (version != kFormatVersion)
    raise(errc::io_error, path + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_text = r.str();
  const uint32_t count = r.u32();
  std::vector<std::pair<std::string, Shape>> names;
  names.reserve(count);
  int64_t total = 0;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    total += shape_numel(shape);
    names.emplace_back(std::move(name), std::move(shape));
  }
  if (r.remaining() != static_cast<size_t>(total) * 8)
    raise(errc::io_error, path + ": parameter payload does not match name table");
  for (auto& [name, shape] : names) {
    Tensor& t = ck.params.add(name, shape);
    r.f64_block(t.mutable_data().data(), t.numel());
  }
  return ck;
}

std::vector<double> spectral_resample(std::span<const double> field,
                                      int64_t n_from, int64_t n_to) {
  if (static_cast<int64_t>(field.size()) != n_from)
    raise(errc::bad_length, "spectral_resample: field length mismatch");
  if (n_to < 2) raise(errc::bad_length, "spectral_resample: target too small");
  if (n_to == n_from) return std::vector<double>(field.begin(), field.end());
  std::vector<cplx> spec = fft_1d(field);
  std::vector<cplx> out(n_to, cplx(0.0, 0.0));
  const int64_t keep = std::min(n_from, n_to);
  const int64_t half = keep / 2;
  // positive modes [0, half], negative modes (half, keep)
  for (int64_t k = 0; k <= half; ++k) out[k] = spec[k];
  for (int64_t k = 1; k < keep - half; ++k) out[n_to - k] = spec[n_from - k];
  if (keep % 2 == 0 && n_to != keep) {
    // split the Nyquist bin of the smaller grid to keep the field real
    if (n_to > n_from) {
      out[half] = spec[half] * 0.5;
      out[n_to - half] = std::conj(spec[half]) * 0.5;
    }
  }
  if (n_to < n_from && n_to % 2 == 0) {
    // fold the discarded conjugate partner into the new Nyquist bin
    out[half] = cplx(spec[half].real() + spec[n_from - half].real(), 0.0) * 0.5;
  }
  const double scale = static_cast<double>(n_to) / static_cast<double>(n_from);
  std::vector<cplx> tmp(out.size());
  for (size_t i = 0; i < out.size(); ++i) tmp[i] = out[i] * scale;
  return ifft_1d_real(tmp);
}

Trajectory resample_trajectory(const Trajectory& t, int64_t n_to) {
  if (t.grid.dim != 1)
    raise(errc::bad_length, "resample_trajectory supports 1D trajectories");
  const int64_t n_from = t.grid.extents[0];
  Trajectory out = t;
  out.grid.extents[0] = n_to;
  out.fields.assign(t.timesteps * n_to, 0.0);
  for (int64_t f = 0; f < t.timesteps; ++f) {
    std::vector<double> r = spectral_resample(t.frame(f), n_from, n_to);
    std::copy(r.begin(), r.end(), out.fields.begin() + f * n_to);
  }
  out.params["resampled_from"] = std::to_string(n_from);
  return out;
}

}  // namespace wf
