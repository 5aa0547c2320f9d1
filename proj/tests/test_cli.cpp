#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "cli_fixture.hpp"

using namespace testing;

#ifndef LIMEVIS_CLI
#error "LIMEVIS_CLI must name the limevis binary"
#endif

namespace {

const std::string kCli = LIMEVIS_CLI;

std::string explain_cmd(const fs::path& data, const fs::path& out, const std::string& extra) {
  return kCli + " explain --dataset " + data.string() + " --format ppmdir --category bees --segmentation slic" +
         " --num-samples 80 --num-features 3 --positive-only false --hide-rest true --seed 11 --epochs 5" +
         " --out " + out.string() + " " + extra;
}

}  // namespace

TEST_CASE("explain writes every output file and is worker-count independent") {
  const fs::path data = write_cli_dataset("cli_data", 12, 32);
  const fs::path a = fresh_dir("cli_a"), b = fresh_dir("cli_b");
  REQUIRE(run(explain_cmd(data, a, "--workers 1"), a / "log.txt") == 0);
  REQUIRE(run(explain_cmd(data, b, "--workers 3"), b / "log.txt") == 0);
  // ppm-directory ids run category by category, so bees are 12..23.
  for (int id = 12; id < 24; ++id) {
    const std::string json = "explanation_" + std::to_string(id) + ".json";
    const std::string ppm = "lime_" + std::to_string(id) + ".ppm";
    REQUIRE(fs::exists(a / json));
    REQUIRE(fs::exists(a / ppm));
    CHECK(slurp(a / json) == slurp(b / json));
    CHECK(slurp(a / ppm) == slurp(b / ppm));
  }
  CHECK(slurp(a / "embedding.csv") == slurp(b / "embedding.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));

  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(summary["category"] == "bees");
  CHECK(summary["images"] == 12);
  CHECK(summary["red"].get<int>() + summary["blue"].get<int>() == 12);
  const auto csv = slurp(a / "embedding.csv");
  CHECK(csv.rfind("index,x,y,correct\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  const auto e = nlohmann::json::parse(slurp(a / "explanation_12.json"));
  CHECK(e["config_echo"]["num_features"] == 3);
  CHECK(e["config_echo"]["positive_only"] == false);
  CHECK(e["selected"].size() <= 3);

  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(data);
}

TEST_CASE("train-builtin then explain with the saved model and with an external command") {
  const fs::path data = write_cli_dataset("cli_train", 6, 24);
  const fs::path out = fresh_dir("cli_train_out");
  const fs::path model = out / "model.lvm";
  REQUIRE(run(kCli + " train-builtin --dataset " + data.string() + " --format ppmdir --epochs 4 --lr 0.1 --seed 2 --out " +
                  model.string(),
              out / "train.txt") == 0);
  CHECK(fs::file_size(model) == 12 + 8 * (3 * 768 + 3));
  CHECK(slurp(out / "train.txt").find("epoch 4") != std::string::npos);

  const fs::path ex = out / "ex";
  CHECK(run(explain_cmd(data, ex, "--model " + model.string()), out / "ex.txt") == 0);
  CHECK(fs::exists(ex / "summary.json"));

  const fs::path ext = out / "ext";
  const std::string echo = std::string(LIMEVIS_ECHO_PREDICTOR) + " normal 3";
  CHECK(run(explain_cmd(data, ext, "--external-cmd '" + echo + "'"), out / "ext.txt") == 0);
  const auto summary = nlohmann::json::parse(slurp(ext / "summary.json"));
  CHECK(summary["category_index"] == 1);
  CHECK(summary["red"] == 6);  // the echo responder always answers class 0

  fs::remove_all(out);
  fs::remove_all(data);
}

TEST_CASE("exit codes") {
  const fs::path data = write_cli_dataset("cli_codes", 3, 16);
  const fs::path out = fresh_dir("cli_codes_out");
  CHECK(run(kCli, out / "a.txt") == 2);
  CHECK(run(kCli + " explain --dataset " + data.string(), out / "b.txt") == 2);
  CHECK(run(explain_cmd(data, out / "x", "--num-features 0"), out / "c.txt") == 2);
  CHECK(run(explain_cmd(data, out / "x", "--segmentation watershed"), out / "d.txt") == 2);
  CHECK(run(kCli + " explain --dataset " + data.string() + " --format ppmdir --category hornets --out " +
                (out / "x").string(),
            out / "e.txt") == 2);
  CHECK(run(explain_cmd(out / "missing", out / "x", ""), out / "f.txt") == 3);
  const std::string bad = std::string(LIMEVIS_ECHO_PREDICTOR) + " badsum 3";
  CHECK(run(explain_cmd(data, out / "x", "--external-cmd '" + bad + "'"), out / "g.txt") == 4);
  CHECK(slurp(out / "g.txt").find("ExternalPredictorFailure") != std::string::npos);
  CHECK(run(kCli + " serve --dataset " + data.string() + " --format ppmdir", out / "h.txt") == 2);
  CHECK(run(kCli + " serve --dataset " + data.string() + " --format ppmdir --model " + (out / "none.lvm").string(),
            out / "i.txt") == 3);
  fs::remove_all(out);
  fs::remove_all(data);
}
