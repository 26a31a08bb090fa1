#include "twinforge/learner/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace twinforge::learner {

namespace {
constexpr char kMagic[4] = {'T', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_doubles(std::ostream& out, const Eigen::VectorXd& v) {
  // host is little-endian on every supported target
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd read_doubles(std::istream& in, std::int64_t n) {
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}
}  // namespace

void save_checkpoint(const PolicyCheckpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["obs_dim"] = ckpt.params.obs_dim();
  header["act_dim"] = ckpt.params.act_dim();
  header["hidden"] = ckpt.params.hidden();
  header["global_step"] = ckpt.global_step;
  header["mean_eval_reward"] = ckpt.mean_eval_reward;
  header["is_best"] = ckpt.is_best;
  header["adam_t"] = ckpt.optimizer.t_;
  header["adam_lr"] = ckpt.optimizer.lr_;
  header["arrays"] = nlohmann::json::array(
      {{{"name", "params"}, {"size", ckpt.params.size()}},
       {{"name", "adam_m"}, {"size", ckpt.optimizer.m_.size()}},
       {{"name", "adam_v"}, {"size", ckpt.optimizer.v_.size()}}});
  const std::string hs = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_doubles(out, ckpt.params.flat);
    write_doubles(out, ckpt.optimizer.m_);
    write_doubles(out, ckpt.optimizer.v_);
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

PolicyCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a TFCK checkpoint: " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  const std::uint32_t hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  nlohmann::json header = nlohmann::json::parse(hs);

  PolicyCheckpoint ckpt;
  ckpt.params = PolicyParams(header.at("obs_dim").get<int>(), header.at("act_dim").get<int>(),
                             header.at("hidden").get<int>());
  ckpt.global_step = header.at("global_step").get<std::int64_t>();
  ckpt.mean_eval_reward = header.at("mean_eval_reward").get<double>();
  ckpt.is_best = header.at("is_best").get<bool>();

  const auto& arrays = header.at("arrays");
  ckpt.params.flat = read_doubles(in, arrays.at(0).at("size").get<std::int64_t>());
  ckpt.optimizer = Adam(ckpt.params.size(), header.at("adam_lr").get<double>());
  ckpt.optimizer.m_ = read_doubles(in, arrays.at(1).at("size").get<std::int64_t>());
  ckpt.optimizer.v_ = read_doubles(in, arrays.at(2).at("size").get<std::int64_t>());
  ckpt.optimizer.t_ = header.at("adam_t").get<std::int64_t>();
  return ckpt;
}

}  // namespace twinforge::learner
