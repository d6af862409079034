// Toy-scale training runs with default hyperparameters. Slow: minutes, not seconds.
#include <doctest.h>

#include <numeric>
#include <sstream>

#include "flamegan/cli.hpp"
#include "flamegan/eval.hpp"
#include "support.hpp"

using namespace flamegan;
namespace fs = std::filesystem;

namespace {

double mean_score(const Discriminator& d, const std::vector<Sample>& samples) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto p = score_samples(d, ptrs);
  return std::accumulate(p.begin(), p.end(), 0.0) / double(p.size());
}

}  // namespace

TEST_CASE("two-stage training on the toy corpus, seed 42") {
  ToyDatasetSpec ds;
  ds.flame_clips = 40;
  ds.nonflame_clips = 30;
  const DatasetSplit split = split_dataset(build_toy_dataset(ds), SplitSpec{});
  const TrainConfig config;  // defaults, seed 42
  const NetSpec spec = NetSpec::toy();

  const SampleSet train = collect_samples(split.train, InputForm::slices);
  const SampleSet test = collect_samples(split.test, InputForm::slices);
  const auto test_flame = test.with_label(Label::flame), test_non = test.with_label(Label::nonflame);

  Stage1Result s1 = train_stage1(train.with_label(Label::flame), spec, config);
  REQUIRE(s1.history.size() == 300);
  const double after_stage1 = mean_score(s1.disc, test_flame);
  INFO("held-out flame after stage 1: " << after_stage1);
  CHECK(after_stage1 > 0.6);

  const Stage2Result s2 = train_stage2(std::move(s1.disc), train.with_label(Label::flame),
                                       train.with_label(Label::nonflame), config);
  const double flame = mean_score(s2.disc, test_flame), non = mean_score(s2.disc, test_non);
  INFO("held-out after stage 2: flame " << flame << ", non-flame " << non);
  CHECK(flame > 0.5);
  CHECK(non < 0.5);

  // detect on unseen clips without flame raises no alarm
  testing::TempDir dir("training");
  const fs::path model = dir / "model.ckpt";
  save_discriminator(s2.disc, config, model);
  for (const char* kind : {"static_scene", "moving_object", "periodic_light"}) {
    const std::string clip = (dir / kind).string();
    const std::string argv_synth[] = {"flamegan", "synth", "--toy", "--kind", kind, "--seed", "4242",
                                      "--output", clip};
    const std::string argv_detect[] = {"flamegan", "detect", "--model", model.string(), "--input", clip,
                                       "--threshold", "0.5"};
    std::ostringstream out, err;
    std::vector<const char*> a;
    for (const auto& s : argv_synth) a.push_back(s.c_str());
    REQUIRE(run_cli(int(a.size()), a.data(), out, err) == kExitOk);
    a.clear();
    for (const auto& s : argv_detect) a.push_back(s.c_str());
    out.str("");
    REQUIRE(run_cli(int(a.size()), a.data(), out, err) == kExitOk);
    std::istringstream lines(out.str());
    std::size_t events = 0, alarms = 0;
    for (std::string line; std::getline(lines, line);) {
      ++events;
      if (nlohmann::json::parse(line).at("decision") == "flame") ++alarms;
    }
    INFO(kind);
    CHECK(events == 3);
    CHECK(alarms == 0);
  }
}
