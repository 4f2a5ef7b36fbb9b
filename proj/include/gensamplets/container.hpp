#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gensamplets/samplets.hpp"

namespace gensamplets {

// Binary basis container, all integers and floats little-endian:
//
//   magic "GSAMPLT\0" | u32 version | u64 N | u32 d | u32 q | u64 #nodes
//   per node (preorder): u32 level | i64 parent | u32 #children | u64 child...
//                        u64 #indices | u64 index... | f64 lower[d] | f64 upper[d]
//   per node: u64 n | u64 m_phi | u64 R rows | u64 R cols | f64 Q (row-major)
//             | f64 R (row-major)
//   u64 #rows, per row of U: u64 node | u32 level | u8 scaling | u64 column
//                            | f64 lower[d] | f64 upper[d]
//   u64 FNV-1a 64 checksum of every preceding byte
inline constexpr char kContainerMagic[8] = {'G', 'S', 'A', 'M', 'P', 'L', 'T', '\0'};
inline constexpr std::uint32_t kContainerVersion = 1;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_basis(const SampletBasis &basis);
/// Throws InputError on bad magic, version, truncation or checksum mismatch.
SampletBasis deserialize_basis(std::span<const std::uint8_t> bytes,
                               std::uint64_t *checksum = nullptr);

/// Writes the container; returns its checksum.
std::uint64_t save_basis(const SampletBasis &basis, const std::filesystem::path &path);
SampletBasis load_basis(const std::filesystem::path &path,
                        std::uint64_t *checksum = nullptr);

}  // namespace gensamplets
