#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "talkit/errors.hpp"
#include "talkit/inference.hpp"
#include "talkit/labels.hpp"
#include "talkit/rng.hpp"
#include "talkit/synthetic.hpp"

using namespace talkit;

TEST_CASE("candidate selection combines threshold and peak rules") {
  std::vector<double> p = {0.1, 0.9, 0.2, 0.6, 0.3};
  CHECK(select_candidates(p) == std::vector<int>{1, 3});
}

TEST_CASE("constant probabilities produce no candidates") {
  std::vector<double> p = {0.4, 0.4, 0.4, 0.4};
  CHECK(select_candidates(p).empty());
}

TEST_CASE("a single spike is its own candidate") {
  std::vector<double> p = {0.0, 1.0, 0.0};
  CHECK(select_candidates(p) == std::vector<int>{1});
}

TEST_CASE("the rise rule replaces the peak rule") {
  std::vector<double> p = {0.0, 0.2, 0.4, 0.3};
  // threshold 0.2 keeps {2, 3}; strict rise keeps index 1
  CHECK(select_candidates(p, true) == std::vector<int>{1, 2, 3});
  // peak reading instead keeps index 2 only (0.4 is a local max)
  CHECK(select_candidates(p, false) == std::vector<int>{2, 3});
}

TEST_CASE("proposal generation pairs starts with later ends under the duration cap") {
  CHECK(generate_proposals({2}, {10, 200}, 50).size() == 1);
  CHECK(generate_proposals({1, 5}, {10, 20}, 100).size() == 4);
  CHECK(generate_proposals({10}, {5}, 100).empty());
}

TEST_CASE("scores are the product of boundary probabilities") {
  std::vector<double> ps(12, 0.0), pe(12, 0.0);
  ps[2] = 0.8;
  pe[9] = 0.5;
  std::vector<Proposal> proposals = {{2, 9, 0, -1}, {2, 3, 0, -1}};
  score_proposals(proposals, ps, pe);
  CHECK(proposals[0].score == doctest::Approx(0.4));
  CHECK(proposals[1].score == 0.0);
}

TEST_CASE("refinement shifts boundaries and rejects inversions") {
  std::vector<double> off_s(12, 0.0), off_e(12, 0.0);
  std::vector<Proposal> unchanged = {{3, 8, 0.5, -1}};
  refine_boundaries(unchanged, off_s, off_e);
  CHECK(unchanged[0].start == 3.0);
  CHECK(unchanged[0].end == 8.0);

  off_s[3] = 1.5;
  std::vector<Proposal> shifted = {{3, 8, 0.5, -1}};
  refine_boundaries(shifted, off_s, off_e);
  CHECK(shifted[0].start == doctest::Approx(4.5));

  off_s[3] = 7.0;
  off_e[8] = -6.0;
  std::vector<Proposal> inverted = {{3, 8, 0.5, -1}};
  refine_boundaries(inverted, off_s, off_e);
  CHECK(inverted[0].start == 3.0);  // 10 > 2 would invert, keep the original
  CHECK(inverted[0].end == 8.0);
}

TEST_CASE("soft-nms leaves disjoint proposals alone") {
  std::vector<Proposal> proposals = {{0, 10, 0.4, -1}, {20, 30, 0.9, -1}};
  auto out = soft_nms(proposals);
  REQUIRE(out.size() == 2);
  CHECK(out[0].score == 0.9);
  CHECK(out[1].score == 0.4);
}

TEST_CASE("soft-nms gaussian decay hand case") {
  // tIoU((0,10), (1,10)) = 9/10; decay = exp(-0.81 / 0.5)
  std::vector<Proposal> proposals = {{0, 10, 0.9, -1}, {1, 10, 0.8, -1}};
  SoftNmsConfig config;
  config.sigma = 0.5;
  auto out = soft_nms(proposals, config);
  REQUIRE(out.size() == 2);
  CHECK(out[0].score == 0.9);
  CHECK(out[1].score == doctest::Approx(0.8 * std::exp(-0.81 / 0.5)).epsilon(1e-12));
}

TEST_CASE("soft-nms matches the quadratic reference on random sets") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Proposal> proposals;
    int count = static_cast<int>(rng.int_in(1, 50));
    for (int i = 0; i < count; ++i) {
      double s = rng.uniform(0, 100);
      double len = rng.uniform(1, 40);
      proposals.push_back({s, s + len, rng.uniform(), -1});
    }
    SoftNmsConfig config;
    config.sigma = 0.5;
    config.score_floor = 1e-3;
    config.top_k = 200;
    auto mine = soft_nms(proposals, config);
    auto reference = oracles::soft_nms_reference(proposals, 0.5, 1e-3, 200);
    REQUIRE(mine.size() == reference.size());
    for (size_t i = 0; i < mine.size(); ++i) {
      CHECK(mine[i].start == reference[i].start);
      CHECK(mine[i].end == reference[i].end);
      CHECK(std::fabs(mine[i].score - reference[i].score) <= 1e-9);
    }
  }
}

TEST_CASE("soft-nms linear decay and selection cap") {
  std::vector<Proposal> proposals = {{0, 10, 0.9, -1}, {1, 10, 0.8, -1}, {50, 60, 0.7, -1}};
  SoftNmsConfig config;
  config.linear = true;
  auto out = soft_nms(proposals, config);
  REQUIRE(out.size() == 3);
  CHECK(out[0].score == 0.9);
  // overlapping proposal decays by (1 - tIoU); the disjoint one is untouched
  CHECK(out[1].score == 0.7);
  CHECK(out[2].score == doctest::Approx(0.8 * (1.0 - 0.9)).epsilon(1e-12));

  config.linear = false;
  config.top_k = 1;
  CHECK(soft_nms(proposals, config).size() == 1);

  config.top_k = 200;
  config.score_floor = 0.5;
  // the overlapping proposal decays below the floor and is dropped
  CHECK(soft_nms(proposals, config).size() == 2);
}

TEST_CASE("soft-nms never raises scores and keeps the top proposal") {
  Rng rng(7);
  std::vector<Proposal> proposals;
  for (int i = 0; i < 30; ++i) {
    double s = rng.uniform(0, 50);
    proposals.push_back({s, s + rng.uniform(2, 20), rng.uniform(), -1});
  }
  double best = 0.0;
  for (const Proposal& p : proposals) best = std::max(best, p.score);
  auto out = soft_nms(proposals);
  CHECK(out[0].score == best);
  for (size_t i = 1; i < out.size(); ++i) CHECK(out[i].score <= out[i - 1].score + 1e-15);
}

TEST_CASE("candidates are strictly increasing and the pair count is capped") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    int t_len = static_cast<int>(rng.int_in(1, 64));
    std::vector<double> p(static_cast<size_t>(t_len));
    for (double& v : p) v = rng.uniform();
    auto c = select_candidates(p);
    for (size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] >= 0);
      CHECK(c[i] < t_len);
      if (i) CHECK(c[i] > c[i - 1]);
    }
    auto proposals = generate_proposals(c, c, 16);
    CHECK(proposals.size() <= c.size() * c.size());
    for (const Proposal& prop : proposals) {
      CHECK(prop.end - prop.start <= 16);
      CHECK(prop.start < prop.end);
    }
  }
}

TEST_CASE("perfect phases recover the annotated segment end to end") {
  AnnotationSet annotations{{{40, 70, 1}}, 128};
  PhaseLabels labels = make_phase_labels(annotations, 128);
  OffsetTargets targets = make_offset_targets(annotations, 128);
  auto as_double = [](const std::vector<uint8_t>& v) {
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
  };
  ProposalPipelineConfig config;
  config.max_duration = 60;
  auto proposals = propose_window(as_double(labels.starting), as_double(labels.ending),
                                  targets.start_offset, targets.end_offset, config);
  auto kept = soft_nms(proposals);
  REQUIRE(!kept.empty());
  CHECK(kept[0].start == 40.0);
  CHECK(kept[0].end == 70.0);
  CHECK(kept[0].score == 1.0);
}

TEST_CASE("nearest-mean classification labels proposals correctly") {
  SyntheticSpec spec;
  spec.seed = 77;
  spec.num_videos = 6;
  spec.frames_per_video = 96;
  spec.channels = 4;
  spec.num_classes = 3;
  spec.noise_sigma = 0.1;
  spec.min_duration = 10;
  spec.max_duration = 24;
  auto videos = generate(spec);

  std::vector<std::pair<const Tensor*, const AnnotationSet*>> refs;
  for (const SyntheticVideo& video : videos) refs.push_back({&video.features, &video.annotations});
  auto means = estimate_class_means(refs, spec.num_classes);

  for (const SyntheticVideo& video : videos) {
    std::vector<Proposal> proposals;
    for (const ActionInstance& inst : video.annotations.instances)
      proposals.push_back({static_cast<double>(inst.start_frame),
                           static_cast<double>(inst.end_frame), 1.0, -1});
    classify_proposals(proposals, video.features, means);
    for (size_t i = 0; i < proposals.size(); ++i)
      CHECK(proposals[i].class_id == video.annotations.instances[i].class_id);
  }
}
