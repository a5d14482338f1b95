#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "image.hpp"
#include "model.hpp"
#include "oracles.hpp"

using namespace td;

namespace {

template <typename Fn>
Errc error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tdsod_test_" + name)).string();
}

}  // namespace

TEST_CASE("growth series parses into four stage rates") {
  ArchConfig cfg = parse_config("[backbone]\ngrowth = \"32-48-64-80\"\n");
  CHECK(cfg.backbone.growth == std::array<int, 4>{32, 48, 64, 80});
}

TEST_CASE("an empty config is the default model") {
  ArchConfig cfg = parse_config("");
  CHECK(cfg == ArchConfig{});
  CHECK(cfg.backbone.growth == std::array<int, 4>{32, 48, 64, 80});
  CHECK(cfg.backbone.repeats == std::array<int, 4>{4, 6, 6, 6});
  CHECK(cfg.head.categories == 21);
  CHECK(cfg.input.height == 300);
}

TEST_CASE("ddb-a requires the expand ratio") {
  CHECK(error_code_of([] { parse_config("[backbone]\nblock = \"ddb-a\"\n"); }) == Errc::config);
  ArchConfig ok = parse_config("[backbone]\nblock = \"ddb-a\"\nexpand = 2\n");
  CHECK(ok.backbone.block == BlockKind::ddb_a);
  CHECK(ok.backbone.expand == 2);
  CHECK(error_code_of([] { parse_config("[backbone]\nexpand = 2\n"); }) == Errc::config);
}

TEST_CASE("config errors carry line numbers") {
  auto message_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("[backbone]\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(message_of("[nope]\n").find("line 1") != std::string::npos);
  CHECK(message_of("[head]\ncategories = many\n").find("line 2") != std::string::npos);
  CHECK(message_of("[head]\ncategories = 1\n").find("categories") != std::string::npos);
  CHECK(message_of("[backbone]\ngrowth = \"1-2-3\"\n").find("growth") != std::string::npos);
  CHECK(message_of("key = 1\n").find("outside") != std::string::npos);
  CHECK(message_of("[head]\ntopk 5\n").find("key = value") != std::string::npos);
  CHECK(message_of("[head]\ntopk = 5\ntopk = 6\n").find("duplicate") != std::string::npos);
}

TEST_CASE("config parse is idempotent through the printer") {
  const char* samples[] = {
      "",
      "[backbone]\nblock = \"ddb-a\"\nexpand = 3\ngrowth = \"8-8-16-16\"\n",
      "[head]\ncategories = 81\nconf_thresh = 0.3\n[dfpn]\nenabled = false\n",
      "[input]\nheight = 300\nwidth = 1200\nmeans = \"104,117,123\"\n[head]\ncategories = 4\n",
  };
  for (const char* text : samples) {
    ArchConfig once = parse_config(text);
    ArchConfig twice = parse_config(config_to_text(once));
    CHECK(once == twice);
  }
}

TEST_CASE("comments and quoting are handled") {
  ArchConfig cfg = parse_config(
      "# top comment\n"
      "[head]\n"
      "categories = 81  # trailing comment\n"
      "\n"
      "[dfpn]\n"
      "enabled = false\n");
  CHECK(cfg.head.categories == 81);
  CHECK(cfg.dfpn.enabled == false);
}

TEST_CASE("weight container round-trips byte for byte") {
  Model m = build_model(parse_config(""));
  WeightStore ws = rand_init(m.graph, 17);
  const std::string bytes = ws.serialize();
  WeightStore back = WeightStore::deserialize(bytes);
  CHECK(back.serialize() == bytes);
  CHECK(back.record_count() == ws.record_count());
  CHECK(back.total_value_count() == ws.total_value_count());
}

TEST_CASE("every single-byte header corruption is rejected") {
  WeightStore ws;
  ws.add("a", {2}, {1.0f, 2.0f});
  ws.add("b", {1, 3}, {3.0f, 4.0f, 5.0f});
  const std::string good = ws.serialize();
  REQUIRE(good.size() >= 12);
  CHECK_NOTHROW(WeightStore::deserialize(good));
  for (size_t i = 0; i < 12; ++i) {
    std::string bad = good;
    bad[i] = char(bad[i] ^ 0x5A);
    CHECK_THROWS_AS(WeightStore::deserialize(bad), Error);
  }
}

TEST_CASE("weight file error kinds are distinct") {
  WeightStore ws;
  ws.add("a", {4}, {1, 2, 3, 4});
  const std::string good = ws.serialize();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(error_code_of([&] { WeightStore::deserialize(bad_magic); }) == Errc::bad_magic);

  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK(error_code_of([&] { WeightStore::deserialize(bad_version); }) == Errc::bad_version);

  std::string truncated = good.substr(0, good.size() - 3);
  CHECK(error_code_of([&] { WeightStore::deserialize(truncated); }) == Errc::truncated);

  std::string trailing = good + "xx";
  CHECK(error_code_of([&] { WeightStore::deserialize(trailing); }) == Errc::corrupt);
}

TEST_CASE("loading checks names and shapes against the graph") {
  Model m = build_model(parse_config(""));
  WeightStore ws = rand_init(m.graph, 3);
  const std::string path = temp_path("roundtrip.tdsd");
  ws.save_file(path);
  CHECK_NOTHROW(load_weights(path, m.graph));

  // a store missing stem.conv1 names the layer
  WeightStore partial;
  for (const WeightRecord& r : ws.records())
    if (r.name.rfind("stem.conv1", 0) != 0) partial.add(r.name, r.dims, r.values);
  const std::string partial_path = temp_path("partial.tdsd");
  partial.save_file(partial_path);
  try {
    load_weights(partial_path, m.graph);
    FAIL("expected missing weight");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_weight);
    CHECK(std::string(e.what()).find("stem.conv1") != std::string::npos);
  }

  // a store built for 21 categories cannot serve an 81-category model
  ArchConfig coco;
  coco.head.categories = 81;
  Model coco_model = build_model(coco);
  CHECK(error_code_of([&] { load_weights(path, coco_model.graph); }) == Errc::shape_mismatch);

  std::filesystem::remove(path);
  std::filesystem::remove(partial_path);
}

TEST_CASE("record count equals the graph's parameterized-record count") {
  Model m = build_model(parse_config(""));
  WeightStore ws = rand_init(m.graph, 5);
  CHECK(ws.record_count() == enumerate_records(m.graph).size());
}

TEST_CASE("rand_init is deterministic and xavier-bounded") {
  Model m = build_model(parse_config(""));
  WeightStore a = rand_init(m.graph, 1234);
  WeightStore b = rand_init(m.graph, 1234);
  CHECK(a.serialize() == b.serialize());
  WeightStore c = rand_init(m.graph, 1235);
  CHECK(a.serialize() != c.serialize());

  CHECK(a.total_value_count() == count_params(m.graph));

  for (const RecordSpec& spec : enumerate_records(m.graph)) {
    const WeightRecord& rec = a.record(spec.name);
    switch (spec.init) {
      case RecordSpec::Init::xavier: {
        const float bound = std::sqrt(6.0f / float(spec.fan_in + spec.fan_out));
        for (float v : rec.values) {
          REQUIRE(v >= -bound);
          REQUIRE(v <= bound);
        }
        break;
      }
      case RecordSpec::Init::zero:
        for (float v : rec.values) REQUIRE(v == 0.0f);
        break;
      case RecordSpec::Init::one:
        for (float v : rec.values) REQUIRE(v == 1.0f);
        break;
      case RecordSpec::Init::l2norm_gamma:
        for (float v : rec.values) REQUIRE(v == 20.0f);
        break;
    }
  }
}

TEST_CASE("ppm decoding and preprocessing") {
  // uniform gray 117: after mean subtraction the G channel is ~0
  std::vector<std::array<unsigned char, 3>> gray(16, {117, 117, 117});
  const std::string path = temp_path("gray.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << oracle::make_ppm(4, 4, gray);
  }
  Tensor img = load_image_ppm(path, 4, 4, {104.0f, 117.0f, 123.0f});
  CHECK(img.shape() == Shape{1, 3, 4, 4});
  for (int i = 0; i < 16; ++i) {
    CHECK(img.plane(0, 0)[i] == doctest::Approx(117.0f - 104.0f));  // B
    CHECK(img.plane(0, 1)[i] == doctest::Approx(0.0f));             // G
    CHECK(img.plane(0, 2)[i] == doctest::Approx(117.0f - 123.0f));  // R
  }
  std::filesystem::remove(path);
}

TEST_CASE("ppm upscale matches the resampling oracle") {
  std::vector<std::array<unsigned char, 3>> px{
      {10, 20, 30}, {40, 50, 60}, {70, 80, 90}, {100, 110, 120}};
  Tensor rgb = decode_ppm(oracle::make_ppm(2, 2, px));
  Tensor engine = preprocess_image(rgb, 4, 4, {0.0f, 0.0f, 0.0f});
  Tensor want = oracle::brute_force_resample(rgb, 4, 4);
  // compare against the oracle after the same BGR reorder
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 16; ++i)
      CHECK(engine.plane(0, c)[i] == doctest::Approx(want.plane(0, 2 - c)[i]).epsilon(1e-5));
}

TEST_CASE("ppm format errors") {
  CHECK(error_code_of([] { decode_ppm("P5\n2 2\n255\n...."); }) == Errc::image_format);
  CHECK(error_code_of([] { decode_ppm("P6\n2 2\n65535\n...."); }) == Errc::image_format);
  CHECK(error_code_of([] { decode_ppm("P6\n2 2\n255\nxy"); }) == Errc::image_format);
  // comments in the header are fine
  std::vector<std::array<unsigned char, 3>> px(4, {1, 2, 3});
  std::string with_comment = "P6\n# comment line\n2 2\n255\n";
  for (const auto& p : px) {
    with_comment.push_back(char(p[0]));
    with_comment.push_back(char(p[1]));
    with_comment.push_back(char(p[2]));
  }
  CHECK_NOTHROW(decode_ppm(with_comment));
}

TEST_CASE("model priors count depends only on the configured input size") {
  Model m = build_model(parse_config(""));
  CHECK(model_priors(m).size() == 8732);

  ArchConfig wide;
  wide.input.width = 1200;
  wide.head.categories = 4;
  Model kitti = build_model(wide);
  std::vector<LevelSize> sizes = model_level_sizes(kitti, 300, 1200);
  CHECK(model_priors(kitti).size() == size_t(prior_count(kitti.cfg.head, sizes)));
}

TEST_CASE("too-small inputs are rejected at build time") {
  ArchConfig cfg;
  cfg.input.height = 64;
  cfg.input.width = 64;
  CHECK(error_code_of([&] { build_model(cfg); }) == Errc::config);
}
