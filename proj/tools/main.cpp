// Command-line front-end. Talks to the engine exclusively through the C API
// in tinydsod/tinydsod.h.
//
// Exit codes: 0 success, 1 usage error, 2 data error.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tinydsod/tinydsod.h"

namespace {

struct DataError {
  std::string message;
};

[[noreturn]] void fail_data(const std::string& msg) { throw DataError{msg}; }

void check(td_status status, const std::string& what) {
  if (status != TD_OK)
    fail_data(what + ": " + td_status_name(status) + ": " + td_last_error());
}

using ModelPtr = std::unique_ptr<td_model, decltype(&td_model_free)>;

ModelPtr open_model(const std::string& config_path) {
  td_model* raw = nullptr;
  check(td_model_create_from_file(config_path.c_str(), &raw), "loading config");
  return ModelPtr(raw, &td_model_free);
}

std::string take_string(char* text) {
  std::string out = text ? text : "";
  td_string_free(text);
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_data("cannot open output file '" + path + "'");
  out << text;
  if (!out) fail_data("failed writing output file '" + path + "'");
}

// "HxW" -> pair; CLI11 validator-style check happens at parse time
bool parse_size(const std::string& s, int& h, int& w) {
  size_t x = s.find('x');
  if (x == std::string::npos) return false;
  try {
    size_t done = 0;
    h = std::stoi(s.substr(0, x), &done);
    if (done != x) return false;
    std::string rest = s.substr(x + 1);
    w = std::stoi(rest, &done);
    if (done != rest.size()) return false;
  } catch (...) {
    return false;
  }
  return h > 0 && w > 0;
}

int run(int argc, char** argv) {
  CLI::App app{"tinydsod - detector inference and static model analysis"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "per-layer shapes, params and MACs");
  std::string an_config, an_size, an_format = "text";
  analyze->add_option("--config", an_config, "architecture config file")->required();
  analyze->add_option("--input-size", an_size, "override input size as HxW (e.g. 300x1200)");
  analyze->add_option("--format", an_format, "output format")
      ->check(CLI::IsMember({"text", "csv"}));

  // infer
  auto* infer = app.add_subcommand("infer", "run detection on a PPM image");
  std::string in_config, in_weights, in_image, in_out;
  float in_thresh = -1.0f;
  infer->add_option("--config", in_config, "architecture config file")->required();
  infer->add_option("--weights", in_weights, "weight file (TDSD container)")->required();
  infer->add_option("--image", in_image, "binary PPM (P6) image")->required();
  infer->add_option("--conf-thresh", in_thresh, "confidence threshold override");
  infer->add_option("--out", in_out, "detections file (default: stdout)");

  // priors
  auto* priors = app.add_subcommand("priors", "dump the default boxes");
  std::string pr_config, pr_out;
  priors->add_option("--config", pr_config, "architecture config file")->required();
  priors->add_option("--out", pr_out, "output file")->required();

  // complexity
  auto* complexity = app.add_subcommand("complexity", "dense-block MACs scaling scan");
  std::string cx_block;
  int cx_growth = 0, cx_expand = 0, cx_n0 = 32;
  std::string cx_depths;
  complexity->add_option("--block", cx_block, "block kind")
      ->required()
      ->check(CLI::IsMember({"ddb-a", "ddb-b"}));
  complexity->add_option("--growth", cx_growth, "growth rate g")->required();
  complexity->add_option("--expand", cx_expand, "expand ratio w (ddb-a only)");
  complexity->add_option("--depths", cx_depths, "comma-separated stack depths, e.g. 8,16,32,64")
      ->required();
  complexity->add_option("--n0", cx_n0, "input channels of the stack");

  // rand-init
  auto* randinit = app.add_subcommand("rand-init", "write seeded random weights");
  std::string ri_config, ri_out;
  uint64_t ri_seed = 0;
  randinit->add_option("--config", ri_config, "architecture config file")->required();
  randinit->add_option("--seed", ri_seed, "RNG seed")->required();
  randinit->add_option("--out", ri_out, "weight file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*analyze) {
    ModelPtr model = open_model(an_config);
    int h = 0, w = 0;
    if (!an_size.empty()) {
      if (!parse_size(an_size, h, w)) {
        std::cerr << "error: --input-size must be HxW, got '" << an_size << "'\n";
        return 1;
      }
    }
    char* text = nullptr;
    check(td_model_report(model.get(), h, w, an_format == "csv" ? 1 : 0, &text), "analyze");
    std::cout << take_string(text);
  } else if (*infer) {
    ModelPtr model = open_model(in_config);
    check(td_model_load_weights(model.get(), in_weights.c_str()), "loading weights");
    td_detections* dets = nullptr;
    check(td_model_detect_ppm(model.get(), in_image.c_str(), in_thresh, &dets), "inference");
    char* text = nullptr;
    td_status st = td_detections_text(dets, &text);
    size_t count = td_detections_size(dets);
    td_detections_free(dets);
    check(st, "formatting detections");
    write_output(in_out, take_string(text));
    std::cerr << count << " detection(s)\n";
  } else if (*priors) {
    ModelPtr model = open_model(pr_config);
    char* text = nullptr;
    check(td_model_priors_text(model.get(), &text), "generating priors");
    write_output(pr_out, take_string(text));
  } else if (*complexity) {
    if (cx_block == "ddb-a" && cx_expand < 1) {
      std::cerr << "error: --expand is required for --block ddb-a\n";
      return 1;
    }
    std::vector<int32_t> depths;
    size_t pos = 0;
    while (pos <= cx_depths.size()) {
      size_t comma = cx_depths.find(',', pos);
      std::string tok = cx_depths.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        size_t done = 0;
        int v = std::stoi(tok, &done);
        if (done != tok.size() || v < 1) throw std::invalid_argument(tok);
        depths.push_back(v);
      } catch (...) {
        std::cerr << "error: --depths must be comma-separated positive integers\n";
        return 1;
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    std::vector<uint64_t> macs(depths.size(), 0);
    double exponent = 0.0;
    check(td_complexity_scan(cx_block.c_str(), cx_growth, cx_expand, cx_n0, depths.data(),
                             depths.size(), macs.data(), &exponent),
          "complexity scan");
    for (size_t i = 0; i < depths.size(); ++i)
      std::printf("L=%-6d macs=%llu\n", depths[i], static_cast<unsigned long long>(macs[i]));
    std::printf("fitted exponent: %.3f\n", exponent);
  } else if (*randinit) {
    ModelPtr model = open_model(ri_config);
    check(td_model_rand_init(model.get(), ri_seed), "initializing weights");
    check(td_model_save_weights(model.get(), ri_out.c_str()), "saving weights");
    uint64_t records = 0, values = 0;
    check(td_model_weight_counts(model.get(), &records, &values), "counting weights");
    std::cerr << "wrote " << records << " records, " << values << " values to " << ri_out
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
