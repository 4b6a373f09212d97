#include "mrrl/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mrrl {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void matrix(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(m(i, j));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void matrix(Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>();
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

struct Named {
  const char* name;
  const Mlp* net;
};

void write_adam(Writer& w, const AdamState& s) {
  w.put<std::int64_t>(s.step);
  for (const Matrix& m : s.m) w.matrix(m);
  for (const Matrix& v : s.v) w.matrix(v);
}

void read_adam(Reader& r, AdamState& s) {
  s.step = r.get<std::int64_t>();
  for (Matrix& m : s.m) r.matrix(m);
  for (Matrix& v : s.v) r.matrix(v);
}

}  // namespace

std::string serialize_checkpoint(const Trainer& t) {
  const Named nets[] = {{"actor", &t.actor},
                        {"critic1", &t.q1},
                        {"critic2", &t.q2},
                        {"target1", &t.q1_target},
                        {"target2", &t.q2_target}};
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(std::size(nets)));
  for (const Named& n : nets) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(n.net->layer_count()));
    for (const Matrix& m : n.net->weights()) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
      w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    }
  }
  for (const Named& n : nets)
    for (const Matrix& m : n.net->weights()) w.matrix(m);
  w.put<double>(t.log_alpha);

  w.put<std::int64_t>(t.updates);
  w.put<std::int64_t>(t.env_steps);
  w.put<std::int32_t>(t.episodes_done);
  write_adam(w, t.actor_opt);
  write_adam(w, t.q1_opt);
  write_adam(w, t.q2_opt);
  write_adam(w, t.alpha_opt);
  const std::string rng = t.rng.state();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rng.size()));
  w.bytes(rng.data(), rng.size());
  return w.take();
}

void deserialize_checkpoint(const std::string& bytes, Trainer& t) {
  Reader r(bytes);
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  r.bytes(sizeof(kCheckpointMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));

  Trainer staged = t;
  Mlp* nets[] = {&staged.actor, &staged.q1, &staged.q2, &staged.q1_target, &staged.q2_target};
  const char* names[] = {"actor", "critic1", "critic2", "target1", "target2"};
  const auto count = r.get<std::uint32_t>();
  if (count != std::size(nets))
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " networks, expected 5");
  for (std::size_t n = 0; n < std::size(nets); ++n) {
    const auto layers = r.get<std::uint32_t>();
    if (layers != nets[n]->layer_count())
      throw CheckpointError(std::string("dimension mismatch in ") + names[n] + ": file has " +
                            std::to_string(layers) + " layers, expected " +
                            std::to_string(nets[n]->layer_count()));
    for (std::size_t k = 0; k < layers; ++k) {
      const auto rows = r.get<std::uint32_t>();
      const auto cols = r.get<std::uint32_t>();
      const Matrix& m = nets[n]->weights()[k];
      if (rows != m.rows() || cols != m.cols())
        throw CheckpointError(std::string("dimension mismatch in ") + names[n] + ".w" + std::to_string(k) +
                              ": file has " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", expected " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
  }
  for (Mlp* net : nets)
    for (Matrix& m : net->weights()) r.matrix(m);
  staged.log_alpha = r.get<double>();

  staged.updates = r.get<std::int64_t>();
  staged.env_steps = r.get<std::int64_t>();
  staged.episodes_done = r.get<std::int32_t>();
  read_adam(r, staged.actor_opt);
  read_adam(r, staged.q1_opt);
  read_adam(r, staged.q2_opt);
  read_adam(r, staged.alpha_opt);
  const auto len = r.get<std::uint32_t>();
  staged.rng.set_state(r.bytes(len));
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
  t = std::move(staged);
}

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer) {
  const std::string bytes = serialize_checkpoint(trainer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, Trainer& trainer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  deserialize_checkpoint(ss.str(), trainer);
}

}  // namespace mrrl
