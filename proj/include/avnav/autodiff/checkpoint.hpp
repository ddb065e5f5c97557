#ifndef AVNAV_AUTODIFF_CHECKPOINT_HPP_
#define AVNAV_AUTODIFF_CHECKPOINT_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avnav/autodiff/optimizer.hpp"

namespace avnav::ad {

// A checkpoint is a pair of files sharing a stem:
//
//   <stem>.manifest   text, one record per line:
//                       avnav-checkpoint 1
//                       meta <key> <value>
//                       tensor <name> <rank> <dim>... <byte_offset>
//   <stem>.bin        little-endian float32 values, tensors back to back
//                     in manifest order.
//
// Names and meta keys may not contain whitespace.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path blob_path(const std::filesystem::path& stem);

// Copies values from `source` into same-named tensors in `targets`. Every
// target must be present with an identical shape.
void assign_tensors(const Checkpoint& source, std::vector<NamedTensor>& targets);

}  // namespace avnav::ad

#endif  // AVNAV_AUTODIFF_CHECKPOINT_HPP_
