#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spg/geometry.hpp"
#include "spg/metrics.hpp"

namespace spg {

// Scene files carry N records of (x, y, z, r, g, b). Two encodings share one
// reader, chosen by magic sniffing:
//   ASCII  — line 1 holds N, then N lines of six decimals.
//   binary — magic "SPG1", uint32 LE N, then N*6 float32 LE values.

PointCloud parse_scene(const std::filesystem::path& path);
void write_scene_ascii(const std::filesystem::path& path, const PointCloud& cloud);
void write_scene_binary(const std::filesystem::path& path, const PointCloud& cloud);

/// Binary run-length pairs (value, count) covering the whole mask, starting
/// at index 0; consecutive pairs always flip the value.
std::vector<std::pair<int, std::size_t>> rle_encode(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> rle_decode(std::span<const std::pair<int, std::size_t>> runs);

struct Prediction {
  std::vector<std::uint8_t> mask;
  Box6 box;
  double score = 0.0;
};

// Prediction files:
//   box cx cy cz sx sy sz
//   score v
//   mask value count [value count ...]
void write_prediction(const std::filesystem::path& path, const Prediction& prediction);
Prediction parse_prediction(const std::filesystem::path& path);

struct GroundTruthRecord {
  std::string id;
  Category category;
  Box6 box;
  std::vector<std::uint8_t> mask;
};

struct GroundTruthFile {
  std::size_t point_count = 0;
  std::vector<GroundTruthRecord> records;
};

// Ground-truth files:
//   gtfile <record count> <N>
// then per record:
//   sample <id>
//   category unique|multiple
//   box cx cy cz sx sy sz
//   mask value count [value count ...]
void write_ground_truth(const std::filesystem::path& path, const GroundTruthFile& file);
GroundTruthFile parse_ground_truth(const std::filesystem::path& path);

}  // namespace spg
