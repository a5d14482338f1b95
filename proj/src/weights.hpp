// Named weight arrays and their binary container.
//
// File layout (all integers little-endian):
//   magic "TDSD" | u32 version | u32 record count | records...
//   record: u16 name length | name bytes (UTF-8) | u8 rank | u32 dims[rank]
//           | f32 values (product of dims, IEEE-754 little-endian)
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace td {

class Graph;

struct WeightRecord {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> values;
};

class WeightStore {
 public:
  void add(std::string name, std::vector<uint32_t> dims, std::vector<float> values);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const WeightRecord& record(const std::string& name) const;
  WeightRecord& record_mut(const std::string& name);
  std::span<const float> values(const std::string& name) const { return record(name).values; }

  const std::vector<WeightRecord>& records() const { return records_; }
  size_t record_count() const { return records_.size(); }
  uint64_t total_value_count() const;

  std::string serialize() const;
  static WeightStore deserialize(const std::string& bytes);

  void save_file(const std::string& path) const;
  static WeightStore load_file(const std::string& path);

 private:
  std::vector<WeightRecord> records_;
  std::unordered_map<std::string, size_t> index_;
};

inline constexpr char kWeightMagic[4] = {'T', 'D', 'S', 'D'};
inline constexpr uint32_t kWeightFormatVersion = 1;

// Checks that every record the graph expects is present with the declared
// shape. Extra records are ignored.
void validate_weights(const WeightStore& store, const Graph& graph);

// Deterministic initialization: conv weights uniform in
// +-sqrt(6/(fan_in+fan_out)), biases 0, batchnorm identity (scale 1,
// shift 0), L2-norm gamma 20. Same seed, same store, byte for byte.
WeightStore rand_init(const Graph& graph, uint64_t seed);

// Loads and validates in one step.
WeightStore load_weights(const std::string& path, const Graph& graph);

}  // namespace td
