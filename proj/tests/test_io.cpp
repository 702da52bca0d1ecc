#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "spg/io.hpp"
#include "spg/rng.hpp"
#include "test_support.hpp"

using namespace spg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spg_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("parse_scene: minimal ascii file") {
  TempDir dir;
  write_text(dir.file("one.txt"), "1\n0 0 0 0.5 0.5 0.5\n");
  const PointCloud cloud = parse_scene(dir.file("one.txt"));
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0] == Vec3(0, 0, 0));
  CHECK(cloud.colors[0] == Vec3(0.5, 0.5, 0.5));
}

TEST_CASE("parse_scene: binary file with two records") {
  TempDir dir;
  {
    std::ofstream out(dir.file("two.spg"), std::ios::binary);
    out.write("SPG1", 4);
    const std::uint32_t n = 2;
    out.write(reinterpret_cast<const char*>(&n), 4);
    const float payload[12] = {0.f, 0.f, 0.f, 0.1f, 0.2f, 0.3f,
                               1.f, 2.f, 3.f, 0.4f, 0.5f, 0.6f};
    out.write(reinterpret_cast<const char*>(payload), sizeof(payload));
  }
  const PointCloud cloud = parse_scene(dir.file("two.spg"));
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.positions[1] == Vec3(1, 2, 3));
  CHECK(cloud.colors[0].x() == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("parse_scene: malformed files are rejected with offsets") {
  TempDir dir;

  write_text(dir.file("short.txt"), "3\n0 0 0 0.5 0.5 0.5\n1 1 1 0.5 0.5 0.5\n");
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("short.txt")),
                       doctest::Contains("truncated scene"), std::runtime_error);

  write_text(dir.file("nan.txt"), "1\nnan 0 0 0.5 0.5 0.5\n");
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("nan.txt")),
                       doctest::Contains("invalid coordinate (line 2)"), std::runtime_error);

  write_text(dir.file("color.txt"), "1\n0 0 0 1.5 0.5 0.5\n");
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("color.txt")),
                       doctest::Contains("invalid color (line 2)"), std::runtime_error);

  write_text(dir.file("junk.txt"), "1\n0 0 zebra 0.5 0.5 0.5\n");
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("junk.txt")), doctest::Contains("line 2"),
                       std::runtime_error);

  write_text(dir.file("trailing.txt"), "1\n0 0 0 0.5 0.5 0.5 9\n");
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("trailing.txt")),
                       doctest::Contains("trailing tokens"), std::runtime_error);

  {
    std::ofstream out(dir.file("cut.spg"), std::ios::binary);
    out.write("SPG1", 4);
    const std::uint32_t n = 2;
    out.write(reinterpret_cast<const char*>(&n), 4);
    const float partial[6] = {0.f, 0.f, 0.f, 0.1f, 0.2f, 0.3f};
    out.write(reinterpret_cast<const char*>(partial), sizeof(partial));
  }
  CHECK_THROWS_WITH_AS(parse_scene(dir.file("cut.spg")),
                       doctest::Contains("byte offset 8"), std::runtime_error);

  CHECK_THROWS(parse_scene(dir.file("missing.txt")));
}

TEST_CASE("scene round trips are identity") {
  TempDir dir;

  // ASCII carries full doubles.
  PointCloud cloud = test::random_cloud(37, 4, 2.5);
  write_scene_ascii(dir.file("cloud.txt"), cloud);
  const PointCloud ascii_back = parse_scene(dir.file("cloud.txt"));
  REQUIRE(ascii_back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(ascii_back.positions[i] == cloud.positions[i]);
    CHECK(ascii_back.colors[i] == cloud.colors[i]);
  }

  // Binary carries float32, so build the fixture from floats; widening to
  // double is exact and the round trip must be identity.
  std::mt19937_64 gen(41);
  PointCloud floats;
  for (int i = 0; i < 37; ++i) {
    floats.positions.emplace_back(static_cast<float>(uniform_in(gen, -2.0, 2.0)),
                                  static_cast<float>(uniform_in(gen, -2.0, 2.0)),
                                  static_cast<float>(uniform_in(gen, -2.0, 2.0)));
    floats.colors.emplace_back(static_cast<float>(unit_uniform(gen)),
                               static_cast<float>(unit_uniform(gen)),
                               static_cast<float>(unit_uniform(gen)));
  }
  write_scene_binary(dir.file("cloud.spg"), floats);
  const PointCloud binary_back = parse_scene(dir.file("cloud.spg"));
  for (std::size_t i = 0; i < floats.size(); ++i) {
    CHECK(binary_back.positions[i] == floats.positions[i]);
    CHECK(binary_back.colors[i] == floats.colors[i]);
  }
}

TEST_CASE("rle: fixtures and round trip") {
  const std::vector<std::uint8_t> all_true(5, 1);
  const auto single = rle_encode(all_true);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == std::pair<int, std::size_t>{1, 5});

  const std::vector<std::uint8_t> two_runs{1, 1, 0, 0, 0};
  const auto runs = rle_encode(two_runs);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0] == std::pair<int, std::size_t>{1, 2});
  CHECK(runs[1] == std::pair<int, std::size_t>{0, 3});

  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> mask(1 + gen() % 400);
    for (auto& bit : mask) bit = gen() & 1;
    const auto encoded = rle_encode(mask);
    for (std::size_t r = 1; r < encoded.size(); ++r)
      CHECK(encoded[r].first != encoded[r - 1].first);  // runs alternate
    CHECK(rle_decode(encoded) == mask);
  }
}

TEST_CASE("prediction files: format fixture and round trip") {
  TempDir dir;
  Prediction prediction;
  prediction.mask = {1, 1, 0, 0, 0};
  prediction.box = {0.25, -1.5, 3.0, 0.5, 0.5, 2.0};
  prediction.score = 0.875;
  write_prediction(dir.file("a.pred"), prediction);

  const std::string text = read_text(dir.file("a.pred"));
  CHECK(text.find("box 0.25 -1.5 3 0.5 0.5 2\n") != std::string::npos);
  CHECK(text.find("score 0.875\n") != std::string::npos);
  CHECK(text.find("mask 1 2 0 3\n") != std::string::npos);

  const Prediction back = parse_prediction(dir.file("a.pred"));
  CHECK(back.mask == prediction.mask);
  CHECK(back.box == prediction.box);
  CHECK(back.score == prediction.score);

  // Arbitrary doubles still round-trip bit-exactly.
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 20; ++trial) {
    Prediction random_pred;
    random_pred.mask.resize(1 + gen() % 64);
    for (auto& bit : random_pred.mask) bit = gen() & 1;
    for (int i = 0; i < 3; ++i) random_pred.box[i] = symmetric_uniform(gen) * 7.3;
    for (int i = 3; i < 6; ++i) random_pred.box[i] = unit_uniform(gen) + 0.01;
    random_pred.score = symmetric_uniform(gen) * 11.17;
    write_prediction(dir.file("roundtrip.pred"), random_pred);
    const Prediction restored = parse_prediction(dir.file("roundtrip.pred"));
    REQUIRE(restored.mask == random_pred.mask);
    REQUIRE(restored.box == random_pred.box);
    REQUIRE(restored.score == random_pred.score);
  }
}

TEST_CASE("prediction files: malformed inputs rejected") {
  TempDir dir;
  write_text(dir.file("badbox.pred"), "box 0 0 0 1 1\nscore 1\nmask 1 1\n");
  CHECK_THROWS_WITH_AS(parse_prediction(dir.file("badbox.pred")),
                       doctest::Contains("line 1"), std::runtime_error);

  write_text(dir.file("badrun.pred"), "box 0 0 0 1 1 1\nscore 1\nmask 2 5\n");
  CHECK_THROWS_WITH_AS(parse_prediction(dir.file("badrun.pred")),
                       doctest::Contains("invalid run value"), std::runtime_error);

  write_text(dir.file("negsize.pred"), "box 0 0 0 -1 1 1\nscore 1\nmask 1 5\n");
  CHECK_THROWS_WITH_AS(parse_prediction(dir.file("negsize.pred")),
                       doctest::Contains("non-positive box size"), std::runtime_error);
}

TEST_CASE("ground truth files: round trip and validation") {
  TempDir dir;
  GroundTruthFile gt;
  gt.point_count = 8;
  gt.records.push_back({"scene0_obj1",
                        Category::kUnique,
                        {0, 0, 0, 1, 1, 1},
                        {1, 1, 1, 0, 0, 0, 0, 0}});
  gt.records.push_back({"scene0_obj2",
                        Category::kMultiple,
                        {1, 2, 3, 0.5, 0.5, 0.5},
                        {0, 0, 0, 0, 1, 1, 1, 1}});
  write_ground_truth(dir.file("gt.txt"), gt);

  const GroundTruthFile back = parse_ground_truth(dir.file("gt.txt"));
  REQUIRE(back.records.size() == 2);
  CHECK(back.point_count == 8);
  CHECK(back.records[0].id == "scene0_obj1");
  CHECK(back.records[0].category == Category::kUnique);
  CHECK(back.records[0].box == gt.records[0].box);
  CHECK(back.records[0].mask == gt.records[0].mask);
  CHECK(back.records[1].category == Category::kMultiple);
  CHECK(back.records[1].mask == gt.records[1].mask);

  write_text(dir.file("shortmask.txt"),
             "gtfile 1 8\nsample s\ncategory unique\nbox 0 0 0 1 1 1\nmask 1 5\n");
  CHECK_THROWS_WITH_AS(parse_ground_truth(dir.file("shortmask.txt")),
                       doctest::Contains("mask runs sum to 5, expected 8"),
                       std::runtime_error);

  write_text(dir.file("badcat.txt"),
             "gtfile 1 2\nsample s\ncategory sometimes\nbox 0 0 0 1 1 1\nmask 1 2\n");
  CHECK_THROWS_WITH_AS(parse_ground_truth(dir.file("badcat.txt")),
                       doctest::Contains("unknown category 'sometimes' (line 3)"),
                       std::runtime_error);

  write_text(dir.file("nohdr.txt"), "sample s\n");
  CHECK_THROWS_WITH_AS(parse_ground_truth(dir.file("nohdr.txt")),
                       doctest::Contains("expected 'gtfile'"), std::runtime_error);
}
