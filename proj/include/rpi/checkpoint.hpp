#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "rpi/policy.hpp"

namespace rpi {

// Binary container: a flat list of named real arrays.
//
//   magic    8 bytes  "RPICKPT\0"
//   version  u32      kCheckpointVersion
//   count    u32      number of arrays
//   per array:
//     name_len u32, name bytes (no terminator)
//     length   u64, then `length` IEEE-754 binary64 values
//
// All integers and reals are little-endian regardless of host byte order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint policy_to_checkpoint(const LearnerPolicy& policy);
std::unique_ptr<LearnerPolicy> policy_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rpi
