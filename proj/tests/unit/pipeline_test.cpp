#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"
#include "mock_world.hpp"

using namespace forge;
using forge::testing::TempDir;

namespace {

struct Fixture {
  TempDir dir;
  Store store{dir.path()};
  ArtifactRepository repo{store};
  GenerationGraph graph = forge::testing::desk_graph();
};

std::uint64_t total_calls(const ProviderRegistry& r) {
  std::uint64_t n = 0;
  for (const auto& [k, p] : r) n += p->call_count();
  return n;
}

CorpusPlan desk_plan(std::size_t seeds, std::size_t ideas) {
  auto plan = plan_corpus(forge::testing::desk_seeds(seeds, ideas), 0.0);
  plan.paths = forge::testing::desk_paths();
  return plan;
}

}  // namespace

TEST(PlanCorpus, ChoosesEnoughClusterSeeds) {
  auto seeds = forge::testing::desk_seeds(10, 3);
  seeds[0].target_idea_count = 1;
  const auto plan = plan_corpus(seeds, 0.30);
  EXPECT_EQ(plan.cluster_seed_count, 3u);
  EXPECT_FALSE(plan.seeds[0].is_cluster_seed);  // one idea cannot form a cluster
  EXPECT_TRUE(plan.seeds[1].is_cluster_seed);
  EXPECT_EQ(plan.clustered_idea_count, 9u);
  EXPECT_DOUBLE_EQ(plan.achieved_fraction, 0.3);

  auto singles = forge::testing::desk_seeds(3, 1);
  try {
    plan_corpus(singles, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
  EXPECT_THROW(plan_corpus({}, 0.3), Error);
  EXPECT_THROW(plan_corpus(forge::testing::desk_seeds(1, 2), 1.5), Error);
  auto dup = forge::testing::desk_seeds(2, 2);
  dup[1].id = dup[0].id;
  EXPECT_THROW(plan_corpus(dup), Error);
}

TEST(PlanCorpus, JsonRoundTrip) {
  auto plan = desk_plan(3, 2);
  plan.rng_seed = 42;
  const auto back = plan_from_json(to_json(plan));
  EXPECT_EQ(back.seeds.size(), 3u);
  EXPECT_EQ(back.paths, plan.paths);
  EXPECT_EQ(back.rng_seed, 42u);
  EXPECT_EQ(back.cluster_seed_count, plan.cluster_seed_count);
}

TEST(LanguageLint, WordBoundaries) {
  LanguageLint lint;
  EXPECT_EQ(lint.violations("Write it in Java."), std::vector<std::string>{"Java"});
  EXPECT_TRUE(lint.violations("A JavaScript-free JavaBean").size() == 1);  // JavaScript only
  EXPECT_TRUE(lint.violations("Use javanese coffee").empty());
  EXPECT_EQ(lint.violations("C++ and C#"), (std::vector<std::string>{"C++", "C#"}));
  EXPECT_THROW(lint.check("COBOL"), Error);
  EXPECT_NO_THROW(lint.check("Add the numbers."));
}

TEST(IdeaParsing, ListFormats) {
  const auto ideas = parse_idea_list(
      "Here are ideas:\n"
      "1. Payroll Total - sum the payroll\n"
      "2) \"Stock Check\": compare stock levels\n"
      "- **Invoice Merge** - merge invoices\n"
      "\n"
      "* Lonely Title\n",
      "seed-x");
  ASSERT_EQ(ideas.size(), 4u);
  EXPECT_EQ(ideas[0].id, "seed-x/payroll-total");
  EXPECT_EQ(ideas[0].one_line, "sum the payroll");
  EXPECT_EQ(ideas[1].title, "Stock Check");
  EXPECT_EQ(ideas[2].title, "Invoice Merge");
  EXPECT_EQ(ideas[3].one_line, "");
  EXPECT_EQ(slugify("  Hello, World!! "), "hello-world");
  EXPECT_EQ(slugify("!!"), "idea");
  EXPECT_EQ(display_language("cobol"), "COBOL");
  EXPECT_EQ(display_language("zig"), "zig");
}

TEST(Pipeline, ExpandSeedRetriesForDuplicates) {
  Fixture f;
  auto provider = forge::testing::mock_provider("strong", [](const CompletionRequest& r) -> std::optional<std::string> {
    // First reply repeats one title; the follow-up asks for the remainder.
    if (r.user_text.find("Do not repeat") == std::string::npos) return "1. Alpha - a\n2. alpha - again\n";
    return "1. Beta - b\n";
  });
  BenchmarkPipeline pipeline(f.graph, {{"strong", provider}}, f.repo);
  SeedConcept seed{"s", "S", false, 2};
  const auto ideas = pipeline.expand_seed(seed, *provider, 2);
  ASSERT_EQ(ideas.size(), 2u);
  EXPECT_EQ(ideas[1].title, "Beta");
  EXPECT_EQ(provider->call_count(), 2u);
  // Cached afterwards, also for a new pipeline on the same store.
  BenchmarkPipeline again(f.graph, {{"strong", provider}}, f.repo);
  EXPECT_EQ(again.expand_seed(seed, *provider, 2), ideas);
  EXPECT_EQ(provider->call_count(), 2u);
}

TEST(Pipeline, ExpandSeedGivesUpAfterRetryBound) {
  Fixture f;
  auto provider = forge::testing::mock_provider(
      "strong", [](const CompletionRequest&) -> std::optional<std::string> { return "1. Same - x\n"; });
  BenchmarkPipeline pipeline(f.graph, {{"strong", provider}}, f.repo);
  try {
    pipeline.expand_seed(SeedConcept{"s", "S", false, 2}, *provider, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateIdeas);
  }
  EXPECT_EQ(provider->call_count(), 3u);  // first try plus idea_retry_bound = 2
}

TEST(Pipeline, ElaborationRejectsLanguageNames) {
  Fixture f;
  auto provider = forge::testing::mock_provider(
      "strong", [](const CompletionRequest&) -> std::optional<std::string> { return "Write a Java program."; });
  BenchmarkPipeline pipeline(f.graph, {{"strong", provider}}, f.repo);
  try {
    pipeline.elaborate_idea(ProgramIdea{"s/a", "s", "A", "x"}, *provider);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLanguageLint);
  }
}

TEST(Pipeline, GeneratesEveryPathWithLineage) {
  Fixture f;
  auto providers = forge::testing::world_registry();
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  const auto corpus = pipeline.generate_corpus(desk_plan(2, 2));
  ASSERT_EQ(corpus.entries.size(), 4u);
  EXPECT_TRUE(corpus.failures.empty());
  // 4 descriptions + 4 x 3 paths x (code + summary).
  EXPECT_EQ(corpus.artifact_count(), 4u + 24u);
  const auto& entry = corpus.entries[0];
  EXPECT_EQ(entry.idea.id, "seed-1/seed-1-routine-1");
  const auto& run = entry.runs.at("description>java>summary");
  ASSERT_TRUE(run.complete());
  ASSERT_EQ(run.artifacts.size(), 3u);
  EXPECT_EQ(run.artifacts[0].id, entry.description.id);
  const auto& summary = run.last();
  EXPECT_EQ(summary.kind, "summary");
  EXPECT_EQ(summary.lineage.idea_id, entry.idea.id);
  EXPECT_EQ(summary.lineage.path, "description>java>summary");
  EXPECT_EQ(summary.lineage.labels, (std::vector<std::string>{"Strong", "Strong"}));
  EXPECT_EQ(summary.lineage.parent, run.artifacts[1].id);
  EXPECT_EQ(forge::testing::markers_of(summary.body), std::set<std::string>{"seed-1-routine-1"});
  EXPECT_EQ(f.repo.ancestry(summary.id).size(), 3u);
}

TEST(Pipeline, RerunIsServedFromTheCache) {
  Fixture f;
  auto providers = forge::testing::world_registry();
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  const auto first = pipeline.generate_corpus(desk_plan(2, 2));
  const auto calls = total_calls(providers);
  const auto size = f.store.size();
  const auto second = pipeline.generate_corpus(desk_plan(2, 2));
  EXPECT_EQ(total_calls(providers), calls);
  EXPECT_EQ(f.store.size(), size);
  EXPECT_EQ(first.fingerprint(), second.fingerprint());
  EXPECT_GT(pipeline.cache_hits(), 0u);
}

TEST(Pipeline, TestedHopsAlwaysRegenerate) {
  Fixture f;
  auto providers = forge::testing::world_registry();
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  const auto corpus = pipeline.generate_corpus(desk_plan(1, 1));
  const auto path = f.graph.path_by_names({"description", "java", "summary"},
                                          std::vector<EdgeLabel>{EdgeLabel::kStrong, EdgeLabel::kTested});
  const auto before = providers.at("tested")->call_count();
  pipeline.run_path(corpus.entries[0].description, path);
  pipeline.run_path(corpus.entries[0].description, path);
  EXPECT_EQ(providers.at("tested")->call_count(), before + 2);
}

TEST(Pipeline, HopFailureIsRecordedNotThrown) {
  Fixture f;
  forge::testing::WorldOptions options;
  options.empty_summaries = {"seed-1-routine-1/Python"};
  auto providers = forge::testing::world_registry(options);
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  const auto corpus = pipeline.generate_corpus(desk_plan(1, 1));
  ASSERT_EQ(corpus.entries.size(), 1u);
  const auto& run = corpus.entries[0].runs.at("description>python>summary");
  ASSERT_FALSE(run.complete());
  EXPECT_EQ(run.failure->hop, 1u);
  EXPECT_EQ(run.failure->code, ErrorCode::kProviderFailure);
  ASSERT_EQ(corpus.failures.size(), 1u);
  EXPECT_EQ(corpus.failures[0].stage, "path:description>python>summary");
}

TEST(Pipeline, GenerationPlansMustBeStrong) {
  Fixture f;
  auto providers = forge::testing::world_registry();
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  auto plan = desk_plan(1, 1);
  plan.paths = {{"cobol", "summary"}};
  EXPECT_THROW(pipeline.generate_corpus(plan), Error);
}

TEST(Pipeline, CorpusJsonRoundTrip) {
  Fixture f;
  auto providers = forge::testing::world_registry();
  BenchmarkPipeline pipeline(f.graph, providers, f.repo);
  const auto corpus = pipeline.generate_corpus(desk_plan(2, 1));
  const auto back = corpus_from_json(to_json(corpus), f.repo);
  EXPECT_EQ(back.fingerprint(), corpus.fingerprint());
  EXPECT_EQ(back.entries.size(), corpus.entries.size());
}

TEST(HumanEdit, RecordsAChildAndAnApproval) {
  Fixture f;
  Lineage lineage;
  lineage.idea_id = "s/a";
  lineage.derivation = "elaboration";
  const auto desc = f.repo.put(make_artifact("description", "Add the numbers.", lineage));
  const auto e = apply_human_edit(f.repo, desc.id, "Add the numbers and print the total.", "ann");
  EXPECT_EQ(e.edited.kind, "description");
  EXPECT_EQ(e.edited.lineage.parent, desc.id);
  EXPECT_EQ(e.edited.lineage.idea_id, "s/a");
  EXPECT_EQ(e.edited.lineage.derivation, "human-edit");
  EXPECT_EQ(f.repo.ancestry(e.edited.id).size(), 2u);
  const auto approval = f.store.get(e.approval_record_id).json();
  EXPECT_EQ(approval.at("editor"), "ann");
  EXPECT_EQ(approval.at("edited_id"), e.edited.id);

  auto code_of = [&](const std::string& body, const std::string& editor) {
    try {
      apply_human_edit(f.repo, desc.id, body, editor);
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code_of("Write it in COBOL.", "ann"), ErrorCode::kLanguageLint);
  EXPECT_EQ(code_of("Add the numbers.", "ann"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of("  \n", "ann"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of("Other text.", ""), ErrorCode::kInvalidArgument);
  EXPECT_THROW(apply_human_edit(f.repo, "missing", "x", "ann"), Error);
}
