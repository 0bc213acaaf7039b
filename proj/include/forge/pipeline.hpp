#pragma once

// Corpus generation: seed concepts -> program ideas -> language-independent
// descriptions -> artifacts produced by walking generation paths.
//
// Every Strong generation is cached in the store under a generation key, so
// re-running an unchanged plan performs zero provider calls. Tested hops are
// always regenerated because they exercise the system under test.

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "forge/artifact.hpp"
#include "forge/error.hpp"
#include "forge/graph.hpp"
#include "forge/provider.hpp"

namespace forge {

struct SeedConcept {
  std::string id;
  std::string title;
  bool is_cluster_seed = false;
  std::size_t target_idea_count = 1;
};

struct ProgramIdea {
  std::string id;
  std::string seed_id;
  std::string title;
  std::string one_line;

  friend bool operator==(const ProgramIdea&, const ProgramIdea&) = default;
};

struct CorpusPlan {
  std::vector<SeedConcept> seeds;  // is_cluster_seed reflects the final choice
  double cluster_fraction_min = 0.30;
  double achieved_fraction = 0.0;
  std::size_t cluster_seed_count = 0;
  std::size_t clustered_idea_count = 0;
  // Kind-name sequences, e.g. {"description","cobol","summary"}.
  std::vector<std::vector<std::string>> paths;
  std::uint64_t rng_seed = 0;
};

CorpusPlan plan_corpus(std::vector<SeedConcept> seeds, double cluster_fraction_min = 0.30);

nlohmann::json to_json(const SeedConcept& s);
SeedConcept seed_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProgramIdea& i);
ProgramIdea idea_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorpusPlan& p);
CorpusPlan plan_from_json(const nlohmann::json& j);

// Word-boundary, case-sensitive match against a list of language names.
class LanguageLint {
 public:
  LanguageLint();  // default list
  explicit LanguageLint(std::vector<std::string> languages);

  std::vector<std::string> violations(std::string_view body) const;
  void check(std::string_view body) const;  // throws kLanguageLint
  const std::vector<std::string>& languages() const { return languages_; }

 private:
  std::vector<std::string> languages_;
};

std::vector<std::string> default_language_names();

struct HopFailure {
  std::size_t hop = 0;  // index of the failing edge within the path
  ErrorCode code = ErrorCode::kProviderFailure;
  std::string message;
};

struct PathRun {
  std::string path_key;              // GenerationGraph::describe(path)
  std::vector<Artifact> artifacts;   // artifacts[0] is the input
  std::optional<HopFailure> failure;

  bool complete() const { return !failure.has_value(); }
  const Artifact& last() const { return artifacts.back(); }
};

struct CorpusEntry {
  ProgramIdea idea;
  bool cluster = false;
  Artifact description;
  std::map<std::string, PathRun> runs;  // keyed by path key
};

struct EntryFailure {
  std::string idea_id;
  std::string stage;
  std::string message;
};

struct Corpus {
  CorpusPlan plan;
  std::vector<CorpusEntry> entries;
  std::vector<EntryFailure> failures;

  // sha256 over the sorted ids of every artifact in the corpus.
  std::string fingerprint() const;
  std::size_t artifact_count() const;
};

nlohmann::json to_json(const Corpus& c);  // artifacts by id only
Corpus corpus_from_json(const nlohmann::json& j, const ArtifactRepository& repo);

struct PipelineOptions {
  std::size_t idea_retry_bound = 2;
  LanguageLint lint;
  std::string description_kind = "description";
  std::string idea_provider = "strong";  // provider for expansion and elaboration
  std::size_t max_parallel_entries = 1;
};

// Display name for a kind used inside prompts ("cpp" -> "C++").
std::string display_language(std::string_view kind_name);

class BenchmarkPipeline {
 public:
  BenchmarkPipeline(const GenerationGraph& graph, ProviderRegistry providers,
                    ArtifactRepository& repo, PipelineOptions options = {});

  std::vector<ProgramIdea> expand_seed(const SeedConcept& seed, Provider& provider,
                                       std::size_t count, std::uint64_t variation = 0);

  Artifact elaborate_idea(const ProgramIdea& idea, Provider& provider);

  PathRun run_path(const Artifact& start, const GenPath& path);

  // Expands every seed, elaborates every idea and runs every plan path.
  Corpus generate_corpus(const CorpusPlan& plan);

  const GenerationGraph& graph() const { return graph_; }
  const ProviderRegistry& providers() const { return providers_; }
  ArtifactRepository& repository() { return repo_; }
  const PipelineOptions& options() const { return options_; }

  // Provider calls skipped thanks to the generation cache.
  std::size_t cache_hits() const { return cache_hits_; }

 private:
  CorpusEntry build_entry(const ProgramIdea& idea, bool cluster,
                          const std::vector<GenPath>& paths, Provider& provider,
                          std::vector<EntryFailure>& failures);

  const GenerationGraph& graph_;
  ProviderRegistry providers_;
  ArtifactRepository& repo_;
  PipelineOptions options_;
  std::atomic<std::size_t> cache_hits_{0};
  std::mutex idea_mu_;
  std::map<std::string, std::vector<ProgramIdea>> idea_cache_;  // by generation key
};

// Edit-and-approve over a stored artifact. The edit becomes a child artifact
// (derivation "human-edit") and the approval a plan record naming the editor.
// Edited descriptions must pass the language lint again.
struct HumanEdit {
  Artifact edited;
  std::string approval_record_id;
};

HumanEdit apply_human_edit(ArtifactRepository& repo, const std::string& artifact_id, std::string body,
                           const std::string& editor, const LanguageLint& lint = LanguageLint());

// Pulls "Title - one line" entries out of a free-form list.
std::vector<ProgramIdea> parse_idea_list(std::string_view text, const std::string& seed_id);

std::string slugify(std::string_view text);

}  // namespace forge
