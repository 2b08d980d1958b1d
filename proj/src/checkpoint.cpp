#include "rpi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rpi {

namespace {

constexpr char kMagic[8] = {'R', 'P', 'I', 'C', 'K', 'P', 'T', '\0'};

void put_u64(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_u64(std::istream& in, int bytes) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), bytes);
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

// Layout tags stored as reals alongside the parameters.
constexpr double kKindSoftmax = 0.0;
constexpr double kKindFeedforward = 1.0;

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const NamedArray& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NamedArray& Checkpoint::at(const std::string& name) const {
  const NamedArray* a = find(name);
  if (a == nullptr) throw std::runtime_error("checkpoint: missing array '" + name + "'");
  return *a;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, kCheckpointVersion, 4);
  put_u64(out, ckpt.arrays.size(), 4);
  for (const NamedArray& a : ckpt.arrays) {
    put_u64(out, a.name.size(), 4);
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_u64(out, a.values.size(), 8);
    for (double v : a.values) put_u64(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = static_cast<std::uint32_t>(get_u64(in, 4));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = get_u64(in, 4);
  Checkpoint ckpt;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name.resize(get_u64(in, 4));
    in.read(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    const auto length = get_u64(in, 8);
    a.values.reserve(length);
    for (std::uint64_t j = 0; j < length; ++j) a.values.push_back(std::bit_cast<double>(get_u64(in, 8)));
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

Checkpoint policy_to_checkpoint(const LearnerPolicy& policy) {
  Checkpoint ckpt;
  const ActionSpace space = policy.action_space();
  const std::vector<double> action_space{space.kind == ActionKind::kDiscrete ? 0.0 : 1.0,
                                         static_cast<double>(space.num_actions),
                                         static_cast<double>(space.dim), space.low, space.high};
  if (const auto* tab = dynamic_cast<const SoftmaxTabularPolicy*>(&policy)) {
    ckpt.arrays.push_back({"policy.kind", {kKindSoftmax}});
    ckpt.arrays.push_back(
        {"policy.shape", {static_cast<double>(tab->num_states()), static_cast<double>(tab->num_actions())}});
  } else if (const auto* ff = dynamic_cast<const FeedforwardPolicy*>(&policy)) {
    ckpt.arrays.push_back({"policy.kind", {kKindFeedforward}});
    std::vector<double> widths;
    for (std::size_t w : ff->shape().widths()) widths.push_back(static_cast<double>(w));
    ckpt.arrays.push_back({"policy.widths", std::move(widths)});
  } else {
    throw std::invalid_argument("policy_to_checkpoint: unsupported policy type");
  }
  ckpt.arrays.push_back({"policy.action_space", action_space});
  const auto params = policy.params();
  ckpt.arrays.push_back({"policy.params", std::vector<double>(params.begin(), params.end())});
  return ckpt;
}

std::unique_ptr<LearnerPolicy> policy_from_checkpoint(const Checkpoint& ckpt) {
  const double kind = ckpt.at("policy.kind").values.at(0);
  const std::vector<double>& params = ckpt.at("policy.params").values;
  if (kind == kKindSoftmax) {
    const auto& shape = ckpt.at("policy.shape").values;
    auto policy = std::make_unique<SoftmaxTabularPolicy>(static_cast<int>(shape.at(0)),
                                                         static_cast<int>(shape.at(1)));
    if (params.size() != policy->num_params()) {
      throw std::runtime_error("checkpoint: parameter count mismatch");
    }
    std::copy(params.begin(), params.end(), policy->params().begin());
    return policy;
  }
  if (kind == kKindFeedforward) {
    const auto& raw = ckpt.at("policy.action_space").values;
    if (raw.size() != 5) throw std::runtime_error("checkpoint: malformed action space");
    ActionSpace space;
    space.kind = raw[0] == 0.0 ? ActionKind::kDiscrete : ActionKind::kContinuous;
    space.num_actions = static_cast<int>(raw[1]);
    space.dim = static_cast<int>(raw[2]);
    space.low = raw[3];
    space.high = raw[4];
    std::vector<std::size_t> widths;
    for (double w : ckpt.at("policy.widths").values) widths.push_back(static_cast<std::size_t>(w));
    return std::make_unique<FeedforwardPolicy>(
        FeedforwardPolicy::from_parts(std::move(widths), space, params));
  }
  throw std::runtime_error("checkpoint: unknown policy kind");
}

}  // namespace rpi
