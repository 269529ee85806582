#pragma once

#include "consflux/types.hpp"

namespace consflux {

// On-disk dataset = JSON manifest + raw payload of 64-bit little-endian
// doubles in [trajectory][time][component][cell] order. `path` names the
// manifest; the payload sits next to it with a .bin extension. The round
// trip is bit-exact and guarded by an FNV-1a checksum.
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace consflux
