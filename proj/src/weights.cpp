#include "weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "graph.hpp"

namespace td {

void WeightStore::add(std::string name, std::vector<uint32_t> dims, std::vector<float> values) {
  if (name.empty() || name.size() > 0xFFFF)
    fail(Errc::invalid_argument, "weight record name must be 1..65535 bytes");
  if (dims.empty() || dims.size() > 8)
    fail(Errc::invalid_argument, "weight record '" + name + "' needs rank 1..8");
  uint64_t n = 1;
  for (uint32_t d : dims) {
    if (d == 0) fail(Errc::invalid_argument, "weight record '" + name + "' has a zero dim");
    n *= d;
  }
  if (n != values.size())
    fail(Errc::invalid_argument, "weight record '" + name + "' declares " + std::to_string(n) +
                                     " values but holds " + std::to_string(values.size()));
  if (!index_.emplace(name, records_.size()).second)
    fail(Errc::invalid_argument, "duplicate weight record '" + name + "'");
  records_.push_back({std::move(name), std::move(dims), std::move(values)});
}

const WeightRecord& WeightStore::record(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(Errc::missing_weight, "missing weight '" + name + "'");
  return records_[it->second];
}

WeightRecord& WeightStore::record_mut(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(Errc::missing_weight, "missing weight '" + name + "'");
  return records_[it->second];
}

uint64_t WeightStore::total_value_count() const {
  uint64_t n = 0;
  for (const auto& r : records_) n += r.values.size();
  return n;
}

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xFF));
  out.push_back(char((v >> 8) & 0xFF));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<uint32_t>(f)); }

struct Cursor {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) {
    if (pos + n > buf.size())
      fail(Errc::truncated, std::string("weight file truncated while reading ") + what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return uint8_t(buf[pos++]);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = uint16_t(uint8_t(buf[pos])) | uint16_t(uint8_t(buf[pos + 1])) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string bytes(size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string WeightStore::serialize() const {
  std::string out;
  out.append(kWeightMagic, 4);
  put_u32(out, kWeightFormatVersion);
  put_u32(out, uint32_t(records_.size()));
  for (const auto& r : records_) {
    put_u16(out, uint16_t(r.name.size()));
    out.append(r.name);
    out.push_back(char(uint8_t(r.dims.size())));
    for (uint32_t d : r.dims) put_u32(out, d);
    for (float f : r.values) put_f32(out, f);
  }
  return out;
}

WeightStore WeightStore::deserialize(const std::string& bytes) {
  Cursor cur{bytes};
  std::string magic = cur.bytes(4, "magic");
  if (std::memcmp(magic.data(), kWeightMagic, 4) != 0)
    fail(Errc::bad_magic, "not a weight file (bad magic)");
  uint32_t version = cur.u32("version");
  if (version != kWeightFormatVersion)
    fail(Errc::bad_version, "unsupported weight format version " + std::to_string(version));
  uint32_t count = cur.u32("record count");

  WeightStore store;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = cur.u16("record name length");
    if (name_len == 0) fail(Errc::corrupt, "weight record " + std::to_string(i) + " has an empty name");
    std::string name = cur.bytes(name_len, "record name");
    uint8_t rank = cur.u8("record rank");
    if (rank == 0 || rank > 8)
      fail(Errc::corrupt, "weight record '" + name + "' has invalid rank " + std::to_string(rank));
    std::vector<uint32_t> dims(rank);
    uint64_t n = 1;
    for (auto& d : dims) {
      d = cur.u32("record dims");
      if (d == 0) fail(Errc::corrupt, "weight record '" + name + "' has a zero dim");
      n *= d;
      if (n > (uint64_t(1) << 32))
        fail(Errc::corrupt, "weight record '" + name + "' is implausibly large");
    }
    cur.need(size_t(n) * 4, "record values");
    std::vector<float> values;
    values.resize(size_t(n));
    for (uint64_t k = 0; k < n; ++k) values[size_t(k)] = std::bit_cast<float>(cur.u32("values"));
    if (store.contains(name)) fail(Errc::corrupt, "duplicate weight record '" + name + "'");
    store.add(std::move(name), std::move(dims), std::move(values));
  }
  if (cur.pos != bytes.size())
    fail(Errc::corrupt, "weight file has " + std::to_string(bytes.size() - cur.pos) +
                            " trailing bytes after the declared records");
  return store;
}

void WeightStore::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  std::string bytes = serialize();
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

WeightStore WeightStore::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open weight file '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void validate_weights(const WeightStore& store, const Graph& graph) {
  for (const RecordSpec& spec : enumerate_records(graph)) {
    const WeightRecord& rec = store.record(spec.name);  // throws missing_weight
    if (rec.dims != spec.dims) {
      auto fmt = [](const std::vector<uint32_t>& d) {
        std::string s;
        for (size_t i = 0; i < d.size(); ++i) s += (i ? "x" : "") + std::to_string(d[i]);
        return s;
      };
      fail(Errc::shape_mismatch, "weight '" + spec.name + "' has shape " + fmt(rec.dims) +
                                     ", model expects " + fmt(spec.dims));
    }
  }
}

namespace {

// Portable uniform floats: 24 high bits of a 64-bit draw, same sequence on
// every platform for a given seed.
float next_unit(std::mt19937_64& rng) {
  return float((rng() >> 40) * (1.0 / 16777216.0));
}

}  // namespace

WeightStore rand_init(const Graph& graph, uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const RecordSpec& spec : enumerate_records(graph)) {
    std::vector<float> values(size_t(spec.value_count()));
    switch (spec.init) {
      case RecordSpec::Init::xavier: {
        const float bound = std::sqrt(6.0f / float(spec.fan_in + spec.fan_out));
        for (auto& v : values) v = (2.0f * next_unit(rng) - 1.0f) * bound;
        break;
      }
      case RecordSpec::Init::zero:
        break;
      case RecordSpec::Init::one:
        std::fill(values.begin(), values.end(), 1.0f);
        break;
      case RecordSpec::Init::l2norm_gamma:
        std::fill(values.begin(), values.end(), 20.0f);
        break;
    }
    store.add(spec.name, spec.dims, std::move(values));
  }
  return store;
}

WeightStore load_weights(const std::string& path, const Graph& graph) {
  WeightStore store = WeightStore::load_file(path);
  validate_weights(store, graph);
  return store;
}

}  // namespace td
