#include "config.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

namespace td {

std::string block_kind_name(BlockKind k) { return k == BlockKind::ddb_a ? "ddb-a" : "ddb-b"; }

BlockKind block_kind_from_name(const std::string& s) {
  if (s == "ddb-a") return BlockKind::ddb_a;
  if (s == "ddb-b") return BlockKind::ddb_b;
  fail(Errc::config, "unknown block kind '" + s + "' (expected ddb-a or ddb-b)");
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
  fail(Errc::config, "line " + std::to_string(line) + ": " + msg);
}

// Value may be a bare token or a double-quoted string; trailing # comments
// are stripped outside quotes.
std::string parse_value(int line, const std::string& raw) {
  std::string v = trim(raw);
  if (!v.empty() && v.front() == '"') {
    size_t end = v.find('"', 1);
    if (end == std::string::npos) fail_line(line, "unterminated quoted value");
    std::string rest = trim(v.substr(end + 1));
    if (!rest.empty() && rest.front() != '#')
      fail_line(line, "unexpected text after quoted value: '" + rest + "'");
    return v.substr(1, end - 1);
  }
  size_t hash = v.find('#');
  if (hash != std::string::npos) v = trim(v.substr(0, hash));
  if (v.empty()) fail_line(line, "missing value");
  return v;
}

int parse_int(int line, const std::string& field, const std::string& v, int lo, int hi) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail_line(line, "field '" + field + "': expected an integer, got '" + v + "'");
  if (out < lo || out > hi)
    fail_line(line, "field '" + field + "': value " + v + " out of range [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return out;
}

float parse_float(int line, const std::string& field, const std::string& v, float lo, float hi) {
  float out = 0.0f;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail_line(line, "field '" + field + "': expected a number, got '" + v + "'");
  if (out < lo || out > hi)
    fail_line(line, "field '" + field + "': value " + v + " out of range");
  return out;
}

bool parse_bool(int line, const std::string& field, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail_line(line, "field '" + field + "': expected true or false, got '" + v + "'");
}

// "32-48-64-80" -> exactly four integers.
std::array<int, 4> parse_series(int line, const std::string& field, const std::string& v, int lo,
                                int hi) {
  std::array<int, 4> out{};
  size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    size_t dash = v.find('-', pos);
    bool last = (i == 3);
    if (last != (dash == std::string::npos))
      fail_line(line, "field '" + field + "': expected four dash-separated integers, got '" + v +
                          "'");
    std::string tok = last ? v.substr(pos) : v.substr(pos, dash - pos);
    out[i] = parse_int(line, field, tok, lo, hi);
    pos = last ? pos : dash + 1;
  }
  return out;
}

std::array<float, 3> parse_triple(int line, const std::string& field, const std::string& v) {
  std::array<float, 3> out{};
  size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    size_t comma = v.find(',', pos);
    bool last = (i == 2);
    if (last != (comma == std::string::npos))
      fail_line(line, "field '" + field + "': expected three comma-separated numbers, got '" + v +
                          "'");
    std::string tok = trim(last ? v.substr(pos) : v.substr(pos, comma - pos));
    out[i] = parse_float(line, field, tok, -1e6f, 1e6f);
    pos = last ? pos : comma + 1;
  }
  return out;
}

std::string float_str(float v) {
  char buf[48];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

ArchConfig parse_config(const std::string& text) {
  ArchConfig cfg;
  std::optional<int> expand;
  int block_line = 0;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_line(line, "malformed section header '" + s + "'");
      section = s.substr(1, s.size() - 2);
      if (section != "backbone" && section != "dfpn" && section != "head" && section != "input")
        fail_line(line, "unknown section '[" + section + "]'");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail_line(line, "expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail_line(line, "missing key before '='");
    if (section.empty()) fail_line(line, "key '" + key + "' outside any section");
    std::string v = parse_value(line, s.substr(eq + 1));

    std::string full = section + "." + key;
    if (!seen.insert(full).second) fail_line(line, "duplicate key '" + full + "'");

    if (section == "backbone") {
      if (key == "growth")
        cfg.backbone.growth = parse_series(line, full, v, 1, 1024);
      else if (key == "repeats")
        cfg.backbone.repeats = parse_series(line, full, v, 0, 64);
      else if (key == "block") {
        block_line = line;
        try {
          cfg.backbone.block = block_kind_from_name(v);
        } catch (const Error& e) {
          fail_line(line, e.what());
        }
      } else if (key == "expand")
        expand = parse_int(line, full, v, 1, 64);
      else
        fail_line(line, "unknown key '" + key + "' in [backbone]");
    } else if (section == "dfpn") {
      if (key == "enabled")
        cfg.dfpn.enabled = parse_bool(line, full, v);
      else if (key == "channels")
        cfg.dfpn.channels = parse_int(line, full, v, 1, 2048);
      else
        fail_line(line, "unknown key '" + key + "' in [dfpn]");
    } else if (section == "head") {
      if (key == "categories")
        cfg.head.categories = parse_int(line, full, v, 2, 1000);
      else if (key == "conf_thresh")
        cfg.head.conf_thresh = parse_float(line, full, v, 0.0f, 1.0f);
      else if (key == "nms_iou")
        cfg.head.nms_iou = parse_float(line, full, v, 0.0f, 1.0f);
      else if (key == "topk")
        cfg.head.topk = parse_int(line, full, v, 1, 100000);
      else
        fail_line(line, "unknown key '" + key + "' in [head]");
    } else {  // input
      if (key == "height")
        cfg.input.height = parse_int(line, full, v, 32, 8192);
      else if (key == "width")
        cfg.input.width = parse_int(line, full, v, 32, 8192);
      else if (key == "means")
        cfg.input.means = parse_triple(line, full, v);
      else
        fail_line(line, "unknown key '" + key + "' in [input]");
    }
  }

  if (cfg.backbone.block == BlockKind::ddb_a) {
    if (!expand)
      fail(Errc::config, "field 'backbone.expand': required when block = \"ddb-a\"" +
                             (block_line ? " (block set on line " + std::to_string(block_line) +
                                               ")"
                                         : std::string()));
    cfg.backbone.expand = *expand;
  } else if (expand) {
    fail(Errc::config, "field 'backbone.expand': only valid when block = \"ddb-a\"");
  }
  return cfg;
}

ArchConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_text(const ArchConfig& cfg) {
  std::ostringstream out;
  out << "[backbone]\n";
  out << "growth = \"" << cfg.backbone.growth[0] << "-" << cfg.backbone.growth[1] << "-"
      << cfg.backbone.growth[2] << "-" << cfg.backbone.growth[3] << "\"\n";
  out << "repeats = \"" << cfg.backbone.repeats[0] << "-" << cfg.backbone.repeats[1] << "-"
      << cfg.backbone.repeats[2] << "-" << cfg.backbone.repeats[3] << "\"\n";
  out << "block = \"" << block_kind_name(cfg.backbone.block) << "\"\n";
  if (cfg.backbone.block == BlockKind::ddb_a) out << "expand = " << cfg.backbone.expand << "\n";
  out << "\n[dfpn]\n";
  out << "enabled = " << (cfg.dfpn.enabled ? "true" : "false") << "\n";
  out << "channels = " << cfg.dfpn.channels << "\n";
  out << "\n[head]\n";
  out << "categories = " << cfg.head.categories << "\n";
  out << "conf_thresh = " << float_str(cfg.head.conf_thresh) << "\n";
  out << "nms_iou = " << float_str(cfg.head.nms_iou) << "\n";
  out << "topk = " << cfg.head.topk << "\n";
  out << "\n[input]\n";
  out << "height = " << cfg.input.height << "\n";
  out << "width = " << cfg.input.width << "\n";
  out << "means = \"" << float_str(cfg.input.means[0]) << "," << float_str(cfg.input.means[1])
      << "," << float_str(cfg.input.means[2]) << "\"\n";
  return out.str();
}

}  // namespace td
