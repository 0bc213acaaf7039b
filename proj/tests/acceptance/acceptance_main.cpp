// Acceptance run: one PASS/FAIL line per primary criterion, exit 1 on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/artifact.hpp"
#include "forge/bootstrap.hpp"
#include "forge/claims.hpp"
#include "forge/judge.hpp"
#include "forge/labels.hpp"
#include "forge/metrics.hpp"
#include "forge/pipeline.hpp"
#include "forge/sampling.hpp"
#include "forge/store.hpp"
#include "mock_world.hpp"

using namespace forge;
using forge::testing::TempDir;

namespace {

// Thrown by check() so a criterion stops at its first broken expectation.
struct Mismatch {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Mismatch{what};
}

template <typename A, typename B>
void check_eq(const A& actual, const B& expected, const std::string& what) {
  if (!(actual == expected)) throw Mismatch{fmt::format("{}: got {}, want {}", what, actual, expected)};
}

void check_eq(const Rational& actual, const Rational& expected, const std::string& what) {
  if (!(actual == expected)) {
    throw Mismatch{fmt::format("{}: got {}, want {}", what, actual.str(), expected.str())};
  }
}

struct Criterion {
  std::string name;
  double limit_seconds;  // 0 = no runtime bound
  std::function<std::string()> body;  // returns a short observed-value note
};

// A generated corpus in its own store.
struct World {
  TempDir dir;
  Store store{dir.path()};
  ArtifactRepository repo{store};
  GenerationGraph graph = forge::testing::desk_graph();
  std::unique_ptr<BenchmarkPipeline> pipeline;
  ProviderRegistry providers;
  Corpus corpus;

  World(std::size_t seeds, std::size_t ideas, forge::testing::WorldOptions options = {},
        double cluster_fraction = 0.30, PipelineOptions pipeline_options = {}) {
    providers = forge::testing::world_registry(options);
    pipeline = std::make_unique<BenchmarkPipeline>(graph, providers, repo, pipeline_options);
    auto plan = plan_corpus(forge::testing::desk_seeds(seeds, ideas), cluster_fraction);
    plan.paths = forge::testing::desk_paths();
    plan.rng_seed = 7;
    corpus = pipeline->generate_corpus(plan);
  }
};

JudgeConfig similarity_judge(const std::string& name) {
  JudgeConfig c;
  c.name = name;
  c.task = JudgeTask::kSimilarityPair;
  c.scale = similarity_scale();
  c.provider = name;
  return c;
}

// -------------------------------------------------------------------------

std::string worked_example() {
  const RankAssignment human{"human", {{"A", 4}, {"B", 5}, {"C", 6}, {"D", 7}}};
  const RankAssignment llm1{"llm1", {{"A", 4}, {"B", 5}, {"C", 7}, {"D", 6}}};
  const RankAssignment llm2{"llm2", {{"A", 3}, {"B", 4}, {"C", 5}, {"D", 6}}};
  const auto a1 = pairwise_order_agreement(human, compare_from_ranks(llm1));
  const auto a2 = pairwise_order_agreement(human, compare_from_ranks(llm2));
  check_eq(a1.value, Rational(5, 6), "agreement llm1");
  check_eq(a2.value, Rational(1), "agreement llm2");
  check_eq(a1.denominator, 6, "pairs scored");
  check_eq(absolute_rank_distance(human, llm1), 2, "distance llm1");
  check_eq(absolute_rank_distance(human, llm2), 4, "distance llm2");
  return "agreement 5/6 vs 6/6, distance 2 vs 4";
}

std::string transitivity_suite() {
  std::vector<std::string> items;
  std::map<std::string, int> scores;
  for (int i = 0; i < 10; ++i) {
    items.push_back(fmt::format("s{}", i));
    scores[items.back()] = (i * 7) % 4;  // includes ties
  }
  const auto triples = all_tuples(items, 3);
  check_eq(triples.size(), std::size_t{120}, "triple count");
  const auto consistent = transitivity_score(compare_from_scores(scores), triples);
  check_eq(consistent.value, Rational(1), "scoring judge");
  check_eq(consistent.denominator, 120, "triples scored");

  const CompareFn cyclic = [](const std::string& a, const std::string& b) {
    static const std::map<std::pair<std::string, std::string>, Preference> wins = {
        {{"x", "y"}, Preference::kFirst}, {{"y", "x"}, Preference::kSecond},
        {{"y", "z"}, Preference::kFirst}, {{"z", "y"}, Preference::kSecond},
        {{"z", "x"}, Preference::kFirst}, {{"x", "z"}, Preference::kSecond}};
    return wins.at({a, b});
  };
  const auto cycle = transitivity_score(cyclic, std::vector<Tuple>{{"x", "y", "z"}});
  check_eq(cycle.value, Rational(0), "cyclic adversary");
  check_eq(cycle.denominator, 1, "cyclic triples");
  return "120 triples at 1, cycle at 0";
}

// Independent oracle: sum of minima over sum of maxima.
Rational jaccard_oracle(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo += std::min(a[i], b[i]);
    hi += std::max(a[i], b[i]);
  }
  return Rational(lo, hi);
}

std::string jaccard_and_error() {
  const std::vector<std::int64_t> m{3, 2, 1};
  check_eq(weighted_jaccard(m, m), Rational(1), "J(M,M)");
  check_eq(weighted_jaccard(m, {2, 2, 2}), Rational(5, 7), "J((3,2,1),(2,2,2))");

  std::vector<std::vector<std::int64_t>> vectors;
  for (std::int64_t x = 0; x <= 3; ++x)
    for (std::int64_t y = 0; y <= 3; ++y)
      for (std::int64_t z = 0; z <= 3; ++z)
        if (x + y + z > 0) vectors.push_back({x, y, z});
  std::map<std::pair<std::size_t, std::size_t>, Rational> d;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      const auto dist = weighted_jaccard_distance(vectors[i], vectors[j]);
      check_eq(dist, Rational(1) - jaccard_oracle(vectors[i], vectors[j]), "distance vs oracle");
      d[{i, j}] = dist;
    }
  }
  std::size_t triangles = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      check(d[{i, j}] == d[{j, i}], "symmetry");
      for (std::size_t k = 0; k < vectors.size(); ++k) {
        check(d[{i, k}] <= d[{i, j}] + d[{j, k}], "triangle inequality");
        ++triangles;
      }
    }
  }

  ErrorProfile profile;
  profile.model = "m";
  profile.counts = {{"e1", 5}, {"e2", 2}, {"e3", 1}};
  profile.weights = {{"e1", Rational(3)}, {"e2", Rational(2)}, {"e3", Rational(1)}};
  check_eq(weighted_error(profile), Rational(20), "C(M)");
  return fmt::format("5/7, {} triangles checked, C(M)=20", triangles);
}

std::string judge_selection() {
  forge::testing::WorldOptions options;
  options.empty_summaries = {"seed-1-routine-1/COBOL", "seed-2-routine-1/Java"};
  World world(10, 4, options);
  DatasetOptions dopts;
  dopts.missing = MissingPolicy::kSkipPairs;
  const auto dataset = build_claim_dataset(world.corpus, forge::testing::desk_path_keys(), dopts);
  check_eq(dataset.pairs.size(), std::size_t{464}, "dataset pairs");
  check_eq(dataset.true_count(), std::size_t{232}, "true pairs");

  auto oracle_p = forge::testing::mock_provider("oracle", forge::testing::oracle_judge());
  auto constant_p = forge::testing::mock_provider("constant", forge::testing::constant_judge(7));
  Judge oracle(similarity_judge("oracle"), *oracle_p);
  Judge constant(similarity_judge("constant"), *constant_p);
  const auto result = select_best_judge(
      {{"oracle", verdict_with(oracle, world.repo)}, {"constant", verdict_with(constant, world.repo)}},
      dataset.pairs);
  check_eq(result.scores.at("oracle").normalized, Rational(1), "oracle score");
  check_eq(result.scores.at("constant").normalized, Rational(1, 2), "constant score");
  check_eq(result.best, std::string("oracle"), "selected judge");

  const auto first = world.repo.get(dataset.pairs[0].a).body;
  const auto second = world.repo.get(dataset.pairs[0].b).body;
  auto flipped_p = forge::testing::mock_provider(
      "flipped", forge::testing::oracle_judge([&](const std::string& f, const std::string& s) {
        return f == first && s == second;
      }));
  Judge flipped(similarity_judge("flipped"), *flipped_p);
  const auto one_off = judge_selection_score(verdict_with(flipped, world.repo), dataset.pairs);
  check_eq(one_off.normalized, Rational(463, 464), "flipped oracle score");
  check(one_off.wrong == std::vector<std::size_t>{0}, "the flip lands on pair 0 only");
  return "oracle 1, constant 1/2, one flip 463/464";
}

std::string end_to_end() {
  World world(4, 3);
  check_eq(world.corpus.entries.size(), std::size_t{12}, "corpus entries");
  auto oracle_p = forge::testing::mock_provider("oracle", forge::testing::oracle_judge());
  Judge oracle(similarity_judge("oracle"), *oracle_p);

  ClaimContext ctx;
  ctx.corpus = &world.corpus;
  ctx.pipeline = world.pipeline.get();
  ctx.judges = {{"oracle", &oracle}};
  ctx.dataset.include_symmetry = true;

  const auto dataset = build_claim_dataset(world.corpus, forge::testing::desk_path_keys(), ctx.dataset);
  check_eq(dataset.true_count(), std::size_t{72}, "true pairs");
  check_eq(dataset.false_count(), std::size_t{72}, "false pairs");

  std::string note;
  for (auto tmpl : {ClaimTemplate::kSameSeedSummaryEquality, ClaimTemplate::kCrossSeedSummaryInequality,
                    ClaimTemplate::kEqualitySymmetry}) {
    ClaimSpec spec;
    spec.id = std::string(to_string(tmpl));
    spec.tmpl = tmpl;
    spec.anchors = forge::testing::desk_paths();
    spec.judge = "oracle";
    const auto r = evaluate_claim(spec, ctx);
    check(!r.cases.empty(), spec.id + " has cases");
    check_eq(r.accuracy, Rational(1), spec.id + " accuracy");
    note += fmt::format("{} {}/{} ", spec.id, r.passes, r.decided);
  }
  note.pop_back();
  return note;
}

std::string cluster_calibration() {
  World world(2, 4, {}, 1.0);
  for (const auto& e : world.corpus.entries) check(e.cluster, "every entry is clustered");

  ClaimSpec spec;
  spec.id = "clusters";
  spec.tmpl = ClaimTemplate::kClusterDistinction;
  spec.anchors = forge::testing::desk_paths();
  spec.judge = "oracle";

  auto oracle_p = forge::testing::mock_provider("oracle", forge::testing::oracle_judge());
  Judge oracle(similarity_judge("oracle"), *oracle_p);
  ClaimContext ctx;
  ctx.corpus = &world.corpus;
  ctx.judges = {{"oracle", &oracle}};
  const auto clean = evaluate_claim(spec, ctx);
  check_eq(clean.cases.size(), std::size_t{96}, "within-cluster comparisons");
  check_eq(clean.accuracy, Rational(1), "clean accuracy");

  const auto first = world.repo.get(clean.cases[0].inputs[0]).body;
  const auto second = world.repo.get(clean.cases[0].inputs[1]).body;
  auto noisy_p = forge::testing::mock_provider(
      "noisy", forge::testing::oracle_judge([&](const std::string& f, const std::string& s) {
        return f == first && s == second;
      }));
  Judge noisy(similarity_judge("oracle"), *noisy_p);
  ctx.judges = {{"oracle", &noisy}};
  const auto r = evaluate_claim(spec, ctx);
  check_eq(r.accuracy, Rational(95, 96), "accuracy with one error");
  return fmt::format("{} comparisons, accuracy {}", r.cases.size(), r.accuracy.str());
}

std::uint64_t calls(const ProviderRegistry& providers) {
  std::uint64_t n = 0;
  for (const auto& [name, p] : providers) n += p->call_count();
  return n;
}

std::string determinism() {
  PipelineOptions parallel;
  parallel.max_parallel_entries = 3;
  World a(3, 2);
  World b(3, 2, {}, 0.30, parallel);
  check(calls(a.providers) > 0, "first run calls providers");
  check_eq(a.store.size(), b.store.size(), "record counts");
  check(a.store.ids() == b.store.ids(), "record id sets are equal");
  check_eq(a.corpus.fingerprint(), b.corpus.fingerprint(), "corpus fingerprints");

  Store reopened(a.dir.path());
  ArtifactRepository repo(reopened);
  auto fresh = forge::testing::world_registry();
  BenchmarkPipeline again(a.graph, fresh, repo);
  auto plan = a.corpus.plan;
  const auto corpus = again.generate_corpus(plan);
  check_eq(calls(fresh), std::uint64_t{0}, "provider calls on rerun");
  check(reopened.ids() == a.store.ids(), "rerun adds no records");
  check_eq(corpus.fingerprint(), a.corpus.fingerprint(), "rerun fingerprint");
  return fmt::format("{} records equal, rerun {} calls, {} cache hits", a.store.size(), calls(fresh),
                     again.cache_hits());
}

std::string bootstrap_flow() {
  // Ten levels so that ten new artifacts can all receive different ranks.
  std::vector<std::string> texts;
  for (int i = 1; i <= 10; ++i) texts.push_back(fmt::format("Quality level {}.", i));
  JudgeConfig cfg;
  cfg.name = "ranker";
  cfg.task = JudgeTask::kScoreSingle;
  cfg.scale = define_scale("ten-level", texts, 6);
  cfg.provider = "ranker";
  auto provider = forge::testing::mock_provider("ranker", [](const CompletionRequest& req) -> std::optional<std::string> {
    const auto body = forge::testing::prompt_block(req.user_text, "Artifact");
    return "Score: " + body.substr(body.rfind(' ') + 1);
  });
  Judge judge(cfg, *provider);

  std::vector<Artifact> prev;
  std::vector<Artifact> next;
  RankAssignment prev_human{"human", {}};
  for (int k = 1; k <= 10; ++k) {
    prev.push_back(make_artifact("summary", fmt::format("previous summary {}", k), {}));
    next.push_back(make_artifact("summary", fmt::format("new summary {}", k), {}));
    prev_human.ranks[prev.back().id] = 11 - k;
  }
  SamplePlan plan;
  plan.n = 24;
  plan.rng_seed = 99;
  const auto batch = bootstrap_ranking(next, prev, prev_human, context_rank_with(judge), plan);
  check_eq(batch.sampled_pairs.size(), std::size_t{24}, "sampled pairs");
  check_eq(batch.judge_ranks.size(), std::size_t{10}, "ranked artifacts");

  // Scripted humans agree with the judge except on the first three pairs.
  std::vector<Preference> human;
  for (const auto& p : batch.sampled_pairs) {
    human.push_back(batch.judge_ranks.at(p[0]) > batch.judge_ranks.at(p[1]) ? Preference::kFirst
                                                                             : Preference::kSecond);
  }
  auto disagreeing = human;
  for (int i = 0; i < 3; ++i) {
    disagreeing[i] = disagreeing[i] == Preference::kFirst ? Preference::kSecond : Preference::kFirst;
  }
  const auto rejected = evaluate_bootstrap(batch, disagreeing);
  check_eq(rejected.agreement.value, Rational(7, 8), "21/24 agreement");
  check(!rejected.accepted, "21/24 is rejected at 0.9");
  const auto accepted = evaluate_bootstrap(batch, human);
  check_eq(accepted.agreement.value, Rational(1), "24/24 agreement");
  check(accepted.accepted, "24/24 is accepted");

  // Same flow through stored label tasks.
  TempDir dir;
  Store store(dir.path());
  LabelBook book(store);
  const auto label_batch = book.create_bootstrap_batch(batch);
  check_eq(label_batch.task_ids.size(), std::size_t{24}, "label tasks");
  for (std::size_t i = 0; i < label_batch.task_ids.size(); ++i) {
    book.submit(label_batch.task_ids[i],
                std::string(disagreeing[i] == Preference::kFirst ? "first" : "second"), "reviewer");
  }
  const auto agreement = book.agreement(label_batch.id);
  check_eq(agreement.fraction, Rational(7, 8), "stored agreement");
  check_eq(agreement.status(), std::string("reject"), "stored decision");
  return "0.875 rejected, 1 accepted";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> criteria = {
      {"worked-example-agreement", 1, worked_example},
      {"transitivity-suite", 1, transitivity_suite},
      {"weighted-jaccard-and-error", 5, jaccard_and_error},
      {"judge-selection", 10, judge_selection},
      {"end-to-end-desk-scale", 30, end_to_end},
      {"cluster-noise-calibration", 5, cluster_calibration},
      {"determinism", 0, determinism},
      {"bootstrap-flow", 1, bootstrap_flow},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string note;
    std::string error;
    try {
      note = c.body();
    } catch (const Mismatch& m) {
      error = m.what;
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && c.limit_seconds > 0 && secs >= c.limit_seconds) {
      error = fmt::format("took {:.3f}s, limit {}s", secs, c.limit_seconds);
    }
    const std::string bound = c.limit_seconds > 0 ? fmt::format(" < {}s", c.limit_seconds) : "";
    if (error.empty()) {
      std::printf("PASS %s (%.3fs%s) %s\n", c.name.c_str(), secs, bound.c_str(), note.c_str());
    } else {
      ++failures;
      std::printf("FAIL %s (%.3fs%s) %s\n", c.name.c_str(), secs, bound.c_str(), error.c_str());
    }
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
