#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mrrl/sac.hpp"

namespace mrrl {

constexpr char kCheckpointMagic[8] = {'M', 'R', 'R', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout, all little-endian:
///   magic "MRRLCKPT", u32 version, u32 network count,
///   per network: u32 layer count, then (u32 rows, u32 cols) per layer,
///   weights row-major f64 for actor, critic1, critic2, target1, target2,
///   f64 log temperature, then counters, optimiser moments and generator state.
std::string serialize_checkpoint(const Trainer& trainer);
void deserialize_checkpoint(const std::string& bytes, Trainer& trainer);

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer);
/// Loads into a trainer whose networks already have the expected shapes.
void load_checkpoint(const std::filesystem::path& path, Trainer& trainer);

}  // namespace mrrl
