#pragma once

#include "wudalab/nn/network.hpp"

#include <string>
#include <utility>
#include <vector>

namespace wudalab {

// Binary parameter checkpoint, versioned by the leading magic string
// "WUDA-CKPT-1". All integers and 64-bit floats are little-endian; weight
// matrices are stored row-major. A file holds one or more named networks.
inline constexpr char kCheckpointMagic[] = "WUDA-CKPT-1\n";

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Network*>>& nets);

std::vector<std::pair<std::string, Network>> load_checkpoint(const std::string& path);

}  // namespace wudalab
