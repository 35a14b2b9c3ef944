#pragma once

#include <string>

#include "nextvisit/model.hpp"
#include "nextvisit/sequence.hpp"

namespace nextvisit {

// Little-endian binary layout:
//   "NVCKPT\0\0" | u32 version | i32 n_layer n_head n_embd vocab_size block_size
//   | f64 rope_base rope_time_unit | u8 bias | f64 dropout | u8 objective
//   | u32 len + vocabulary hash | u32 tensor count
//   | per tensor: u32 len + name, u32 rows, u32 cols, f32 data (row-major)
struct Checkpoint {
  ModelConfig config;
  Objective objective = Objective::Raven;
  std::string vocab_hash;
  ModelParams<float> params;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

/// Throws ProvenanceError when the checkpoint was trained against a
/// different vocabulary.
Checkpoint load_checkpoint(const std::string& path, const std::string& expected_vocab_hash);

}  // namespace nextvisit
