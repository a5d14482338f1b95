// Declarative architecture description and its textual config format.
#pragma once

#include <array>
#include <string>

#include "error.hpp"

namespace td {

enum class BlockKind { ddb_a, ddb_b };

std::string block_kind_name(BlockKind k);
BlockKind block_kind_from_name(const std::string& s);

struct BackboneConfig {
  std::array<int, 4> growth{32, 48, 64, 80};
  std::array<int, 4> repeats{4, 6, 6, 6};
  BlockKind block = BlockKind::ddb_b;
  int expand = 0;  // ddb-a only; 0 means unset
  std::array<int, 4> transitions{128, 128, 256, 64};

  bool operator==(const BackboneConfig&) const = default;
};

struct DfpnConfig {
  bool enabled = true;
  int channels = 128;

  bool operator==(const DfpnConfig&) const = default;
};

struct HeadConfig {
  int categories = 21;  // including background at index 0
  float conf_thresh = 0.01f;
  float nms_iou = 0.45f;
  int topk = 200;

  // Fixed multibox layout for the six prediction scales.
  static constexpr std::array<int, 6> kBoxesPerLevel{4, 6, 6, 6, 4, 4};
  static constexpr float kScaleMin = 0.2f;
  static constexpr float kScaleMax = 0.9f;
  static constexpr float kScaleBeyondLast = 1.0f;  // pairs with the last level's sqrt box
  static constexpr std::array<float, 4> kVariances{0.1f, 0.1f, 0.2f, 0.2f};
  static constexpr int kPreNmsTopK = 400;  // per-category candidate cap before NMS

  bool operator==(const HeadConfig&) const = default;
};

struct InputConfig {
  int height = 300;
  int width = 300;
  std::array<float, 3> means{104.0f, 117.0f, 123.0f};  // BGR order

  bool operator==(const InputConfig&) const = default;
};

struct ArchConfig {
  BackboneConfig backbone;
  DfpnConfig dfpn;
  HeadConfig head;
  InputConfig input;

  bool operator==(const ArchConfig&) const = default;
};

// Parses the INI-style config text. Every failure names the line and field;
// unknown sections and keys are rejected. An empty document yields the
// all-defaults configuration.
ArchConfig parse_config(const std::string& text);
ArchConfig parse_config_file(const std::string& path);

// Canonical text form; parse(config_to_text(cfg)) == cfg.
std::string config_to_text(const ArchConfig& cfg);

}  // namespace td
