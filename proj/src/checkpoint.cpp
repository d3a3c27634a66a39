#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "erl/reward_model.hpp"

namespace erl {

namespace {

constexpr const char* kMagic = "erl-reward-ensemble";
constexpr int kVersion = 1;

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

std::string serialize_ensemble(const RewardEnsemble& ensemble) {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "members " << ensemble.size() << '\n';
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const RewardNet& net = ensemble.member(m);
    out << "member " << m << " input_dim " << net.input_dim() << " hidden "
        << net.hidden() << " params " << net.parameters().size() << '\n';
    for (double v : net.parameters()) out << hex_double(v) << '\n';
  }
  return out.str();
}

RewardEnsemble deserialize_ensemble(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& why) -> void {
    throw std::runtime_error("malformed checkpoint: " + why);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) fail("bad header");
  if (version != kVersion) fail("unsupported version " + std::to_string(version));

  std::string key;
  std::size_t count = 0;
  if (!(in >> key >> count) || key != "members" || count == 0) fail("member count");

  std::vector<RewardNet> members;
  for (std::size_t m = 0; m < count; ++m) {
    std::string k1, k2, k3, k4;
    std::size_t index = 0, input_dim = 0, hidden = 0, params = 0;
    if (!(in >> k1 >> index >> k2 >> input_dim >> k3 >> hidden >> k4 >> params) ||
        k1 != "member" || k2 != "input_dim" || k3 != "hidden" || k4 != "params" ||
        index != m)
      fail("member header " + std::to_string(m));
    if (params != RewardNet::parameter_count(input_dim, hidden)) fail("parameter count");
    RewardNet net(input_dim, hidden, 0);
    auto dst = net.parameters();
    for (std::size_t i = 0; i < params; ++i) {
      std::string token;
      if (!(in >> token)) fail("truncated parameters");
      char* end = nullptr;
      dst[i] = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') fail("bad number '" + token + "'");
    }
    members.push_back(std::move(net));
  }
  return RewardEnsemble(std::move(members));
}

void save_checkpoint(const RewardEnsemble& ensemble, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << serialize_ensemble(ensemble);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

RewardEnsemble load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_ensemble(buf.str());
}

}  // namespace erl
