#include "imcgae/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace imcgae {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void write_f64(std::ostream& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_tensor(std::ostream& out, const std::string& name, const NumArray& t) {
  write_string(out, name);
  write_u32(out, static_cast<std::uint32_t>(t.rows));
  write_u32(out, static_cast<std::uint32_t>(t.cols));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

struct Reader {
  std::ifstream in;
  std::string path;

  void read(char* buf, std::size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("checkpoint truncated: " + path);
  }
  std::uint32_t u32() {
    char buf[4];
    read(buf, 4);
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  double f64() {
    char buf[8];
    read(buf, 8);
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw std::runtime_error("checkpoint corrupt (string length): " + path);
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  NumArray tensor() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 31))
      throw std::runtime_error("checkpoint corrupt (tensor size): " + path);
    NumArray t(static_cast<int>(rows), static_cast<int>(cols));
    read(reinterpret_cast<char*>(t.data.data()), t.size() * sizeof(double));
    if (!t.all_finite()) throw std::runtime_error("checkpoint has non-finite values: " + path);
    return t;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const HyperParams& hp) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);

  write_string(out, kCheckpointTag);
  write_u32(out, static_cast<std::uint32_t>(hp.layers));
  write_u32(out, static_cast<std::uint32_t>(hp.dim_identical));
  write_u32(out, static_cast<std::uint32_t>(hp.dim_role));
  write_u32(out, static_cast<std::uint32_t>(hp.dim_latent));
  write_u32(out, static_cast<std::uint32_t>(hp.dim_decode));
  write_f64(out, hp.p0);
  write_f64(out, hp.theta);
  write_f64(out, hp.lambda_nrr);
  write_f64(out, hp.lr);
  write_u32(out, static_cast<std::uint32_t>(hp.epochs));
  write_f64(out, static_cast<double>(hp.seed));

  write_u32(out, static_cast<std::uint32_t>(params.n_users));
  write_u32(out, static_cast<std::uint32_t>(params.n_items));
  write_u32(out, static_cast<std::uint32_t>(params.levels.size()));
  for (const double v : params.levels) write_f64(out, v);

  const auto tensors = params.tensors();
  const auto names = params.tensor_names();
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t k = 0; k < tensors.size(); ++k) write_tensor(out, names[k], *tensors[k]);
  if (!out) throw std::runtime_error("i/o error while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r{std::ifstream(path, std::ios::binary), path};
  if (!r.in) throw std::runtime_error("cannot open checkpoint: " + path);

  const std::uint32_t tag_len = r.u32();
  std::string tag;
  if (tag_len == sizeof(kCheckpointTag) - 1) {
    tag.resize(tag_len);
    r.read(tag.data(), tag_len);
  }
  if (tag != kCheckpointTag)
    throw std::runtime_error("not an imcgae-ckpt-v1 checkpoint: " + path);

  Checkpoint ck;
  ck.hp.layers = static_cast<int>(r.u32());
  ck.hp.dim_identical = static_cast<int>(r.u32());
  ck.hp.dim_role = static_cast<int>(r.u32());
  ck.hp.dim_latent = static_cast<int>(r.u32());
  ck.hp.dim_decode = static_cast<int>(r.u32());
  ck.hp.p0 = r.f64();
  ck.hp.theta = r.f64();
  ck.hp.lambda_nrr = r.f64();
  ck.hp.lr = r.f64();
  ck.hp.epochs = static_cast<int>(r.u32());
  ck.hp.seed = static_cast<std::uint64_t>(r.f64());

  ck.params.n_users = static_cast<std::int32_t>(r.u32());
  ck.params.n_items = static_cast<std::int32_t>(r.u32());
  const std::uint32_t T = r.u32();
  if (T == 0 || T > (1u << 16)) throw std::runtime_error("checkpoint corrupt (levels): " + path);
  for (std::uint32_t t = 0; t < T; ++t) ck.params.levels.push_back(r.f64());

  const std::uint32_t n_tensors = r.u32();
  ck.params.latent.resize(T);
  ck.params.decoder.resize(T);
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    const std::string name = r.str();
    NumArray t = r.tensor();
    if (name == "identical") {
      ck.params.identical = std::move(t);
    } else if (name == "role") {
      ck.params.role = std::move(t);
    } else if (name == "transform") {
      ck.params.transform = std::move(t);
    } else if (name.rfind("latent.", 0) == 0) {
      const std::size_t idx = std::stoul(name.substr(7));
      if (idx >= T) throw std::runtime_error("checkpoint corrupt (latent index): " + path);
      ck.params.latent[idx] = std::move(t);
    } else if (name.rfind("decoder.", 0) == 0) {
      const std::size_t idx = std::stoul(name.substr(8));
      if (idx >= T) throw std::runtime_error("checkpoint corrupt (decoder index): " + path);
      ck.params.decoder[idx] = std::move(t);
    } else {
      throw std::runtime_error("checkpoint has unknown tensor '" + name + "': " + path);
    }
  }

  for (std::uint32_t t = 0; t < T; ++t) {
    if (ck.params.latent[t].rows != ck.params.n_users + ck.params.n_items)
      throw std::runtime_error("checkpoint latent table does not match dims: " + path);
    if (ck.params.decoder[t].rows != ck.hp.dim_decode)
      throw std::runtime_error("checkpoint decoder does not match dims: " + path);
  }
  return ck;
}

}  // namespace imcgae
