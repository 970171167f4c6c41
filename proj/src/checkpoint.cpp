#include "afda/checkpoint.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "afda/trainer.hpp"

namespace afda {

namespace wire {

void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) write_u64(out, d);
  for (double v : t.data()) write_f64(out, v);
}

std::uint8_t read_u8(std::istream& in) {
  int c = in.get();
  if (c == std::istream::traits_type::eof())
    throw std::runtime_error("checkpoint: unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t read_u64(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (in.gcount() != 8) throw std::runtime_error("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return v;
}

std::uint32_t read_u32(std::istream& in) {
  char bytes[4];
  in.read(bytes, 4);
  if (in.gcount() != 4) throw std::runtime_error("checkpoint: unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

std::string read_string(std::istream& in) {
  std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::uint64_t>(in.gcount()) != n)
    throw std::runtime_error("checkpoint: unexpected end of file");
  return s;
}

Tensor read_tensor(std::istream& in) {
  std::uint32_t rank = read_u32(in);
  if (rank > 2) throw std::runtime_error("checkpoint: bad tensor rank");
  std::vector<std::size_t> shape;
  for (std::uint32_t i = 0; i < rank; ++i)
    shape.push_back(static_cast<std::size_t>(read_u64(in)));
  std::size_t n = shape_product(shape);
  std::vector<double> data(n);
  for (double& v : data) v = read_f64(in);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace wire

namespace {

void write_mlp_tensors(std::ostream& out, const Mlp& mlp) {
  wire::write_u32(out, static_cast<std::uint32_t>(mlp.weights.size()));
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    wire::write_tensor(out, mlp.weights[i]);
    wire::write_tensor(out, mlp.biases[i]);
  }
}

void read_mlp_tensors(std::istream& in, Mlp& mlp) {
  std::uint32_t n = wire::read_u32(in);
  if (n != mlp.weights.size())
    throw std::runtime_error("checkpoint: layer count does not match the config's model");
  for (std::size_t i = 0; i < n; ++i) {
    Tensor w = wire::read_tensor(in);
    Tensor b = wire::read_tensor(in);
    if (!w.same_shape(mlp.weights[i]) || !b.same_shape(mlp.biases[i]))
      throw std::runtime_error("checkpoint: tensor shape does not match the config's model");
    mlp.weights[i] = std::move(w);
    mlp.biases[i] = std::move(b);
  }
}

void write_adam(std::ostream& out, const AdamState& s) {
  wire::write_u64(out, static_cast<std::uint64_t>(s.step));
  wire::write_u32(out, static_cast<std::uint32_t>(s.m.size()));
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    wire::write_tensor(out, s.m[i]);
    wire::write_tensor(out, s.v[i]);
  }
}

void read_adam(std::istream& in, AdamState& s) {
  s.step = static_cast<long>(wire::read_u64(in));
  std::uint32_t n = wire::read_u32(in);
  if (n != s.m.size()) throw std::runtime_error("checkpoint: optimizer state mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    s.m[i] = wire::read_tensor(in);
    s.v[i] = wire::read_tensor(in);
  }
}

}  // namespace

void Trainer::save_checkpoint(std::ostream& out) const {
  out.write(kCheckpointMagic, 8);
  wire::write_u32(out, kCheckpointVersion);
  wire::write_string(out, cfg_.to_text());
  wire::write_u64(out, split_seed_);
  wire::write_u64(out, train_seed_);
  wire::write_u32(out, static_cast<std::uint32_t>(t_));
  wire::write_string(out, train_rng_.serialize());
  wire::write_string(out, sampler_.serialize_state());
  write_mlp_tensors(out, params_.f);
  write_mlp_tensors(out, params_.g);
  write_mlp_tensors(out, params_.d);
  write_adam(out, opt_f_);
  write_adam(out, opt_g_);
  write_adam(out, opt_d_);
  wire::write_u8(out, teacher_.has_value() ? 1 : 0);
  if (teacher_) {
    wire::write_f64(out, teacher_->alpha);
    write_mlp_tensors(out, teacher_->f);
    write_mlp_tensors(out, teacher_->g);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw std::runtime_error("checkpoint: bad magic");
  std::uint32_t version = wire::read_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  ExperimentConfig cfg = parse_config_text(wire::read_string(in));
  std::uint64_t split_seed = wire::read_u64(in);
  std::uint64_t train_seed = wire::read_u64(in);
  auto trainer = std::make_unique<Trainer>(cfg, split_seed, train_seed);

  trainer->t_ = static_cast<int>(wire::read_u32(in));
  trainer->train_rng_ = Rng::deserialize(wire::read_string(in));
  trainer->sampler_.restore_state(wire::read_string(in));
  read_mlp_tensors(in, trainer->params_.f);
  read_mlp_tensors(in, trainer->params_.g);
  read_mlp_tensors(in, trainer->params_.d);
  read_adam(in, trainer->opt_f_);
  read_adam(in, trainer->opt_g_);
  read_adam(in, trainer->opt_d_);
  if (wire::read_u8(in) != 0) {
    if (!trainer->teacher_)
      throw std::runtime_error("checkpoint: teacher state for a non-teacher config");
    trainer->teacher_->alpha = wire::read_f64(in);
    read_mlp_tensors(in, trainer->teacher_->f);
    read_mlp_tensors(in, trainer->teacher_->g);
  }
  return trainer;
}

}  // namespace afda
