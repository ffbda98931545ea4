#include "intact/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace intact {

namespace {

constexpr char kMagic[4] = {'I', 'V', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw io_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  const auto& c = params.config;
  put<std::int64_t>(out, c.latent_dim);
  put<std::int64_t>(out, c.outcome_dim);
  put<std::int64_t>(out, c.covariate_dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.hidden.size()));
  for (Index h : c.hidden) put<std::int64_t>(out, h);
  put<std::uint8_t>(out, c.balanced_prior);
  put<std::uint8_t>(out, c.separate_decoder_heads);
  put<std::uint8_t>(out, c.learn_outcome_noise);
  put<std::uint8_t>(out, c.degenerate_prior);
  put<double>(out, c.outcome_var);
  put<double>(out, c.var_floor);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.nets.size()));
  for (const auto& [role, net] : params.nets) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(role));
    put<std::int64_t>(out, net.offset());
    put<std::int64_t>(out, net.size());
  }
  put<std::int64_t>(out, params.theta.size());
  out.write(reinterpret_cast<const char*>(params.theta.data()),
            static_cast<std::streamsize>(sizeof(double) * params.theta.size()));
  if (!out) throw io_error("checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error("checkpoint: " + path + " is not a parameter checkpoint");
  if (get<std::uint32_t>(in) != kVersion)
    throw io_error("checkpoint: unsupported version in " + path);

  ModelConfig cfg;
  cfg.latent_dim = get<std::int64_t>(in);
  cfg.outcome_dim = get<std::int64_t>(in);
  cfg.covariate_dim = get<std::int64_t>(in);
  const std::uint32_t n_hidden = get<std::uint32_t>(in);
  cfg.hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    cfg.hidden.push_back(get<std::int64_t>(in));
  cfg.balanced_prior = get<std::uint8_t>(in);
  cfg.separate_decoder_heads = get<std::uint8_t>(in);
  cfg.learn_outcome_noise = get<std::uint8_t>(in);
  cfg.degenerate_prior = get<std::uint8_t>(in);
  cfg.outcome_var = get<double>(in);
  cfg.var_floor = get<double>(in);

  ModelParams params = init_params(cfg, 0);
  const std::uint32_t n_nets = get<std::uint32_t>(in);
  if (n_nets != params.nets.size())
    throw io_error("checkpoint: net count mismatch in " + path);
  for (const auto& [role, net] : params.nets) {
    if (get<std::uint8_t>(in) != static_cast<std::uint8_t>(role) ||
        get<std::int64_t>(in) != net.offset() ||
        get<std::int64_t>(in) != net.size())
      throw io_error("checkpoint: layout mismatch in " + path);
  }
  const std::int64_t count = get<std::int64_t>(in);
  if (count != params.theta.size())
    throw io_error("checkpoint: parameter count mismatch in " + path);
  in.read(reinterpret_cast<char*>(params.theta.data()),
          static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw io_error("checkpoint: truncated parameters in " + path);
  return params;
}

}  // namespace intact
