#include "forge/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "forge/hash.hpp"

namespace forge {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Strips one surrounding markdown code fence, if present.
std::string strip_fence(std::string text) {
  const std::string t = trim(text);
  if (t.rfind("```", 0) != 0 || t.size() < 6 || t.compare(t.size() - 3, 3, "```") != 0) return text;
  const auto first_nl = t.find('\n');
  if (first_nl == std::string::npos) return text;
  std::string inner = t.substr(first_nl + 1, t.size() - 3 - (first_nl + 1));
  if (!inner.empty() && inner.back() == '\n') inner.pop_back();
  return inner;
}

CompletionRequest expansion_request(const SeedConcept& seed, std::size_t count,
                                    const std::vector<std::string>& avoid, std::uint64_t variation) {
  CompletionRequest r;
  r.system_text = "You propose small, well-defined program ideas for a code benchmark.";
  r.user_text = fmt::format("Seed concept: {}\nPropose {} distinct program ideas that cover this seed concept.", seed.title, count);
  if (seed.is_cluster_seed) {
    r.user_text += " The ideas must form one conceptual family: related programs that share similarities but are not identical.";
  }
  r.user_text += "\nWrite one idea per line in the form \"<Title> - <one-line task statement>\".";
  if (!avoid.empty()) {
    r.user_text += "\nDo not repeat any of these titles: " + fmt::format("{}", fmt::join(avoid, ", ")) + ".";
  }
  if (variation != 0) r.user_text += fmt::format("\nVariation seed: {}", variation);
  r.tag = "expand:" + seed.id;
  return r;
}

CompletionRequest elaboration_request(const ProgramIdea& idea) {
  CompletionRequest r;
  r.system_text = "You write precise, language-independent program descriptions.";
  r.user_text = fmt::format(
      "Program idea: {} - {}\n"
      "Write a detailed description of this program that is clear enough to implement it in any "
      "programming language. Start with an imperative task statement (\"Write a program that "
      "...\"), state the inputs and outputs, then list the implementation steps under \"Steps:\" "
      "as a numbered list. Do not name any programming language.",
      idea.title, idea.one_line);
  r.tag = "elaborate:" + idea.id;
  return r;
}

CompletionRequest hop_request(const ArtifactKind& from, const ArtifactKind& to, const Artifact& input) {
  const std::string src = display_language(from.name);
  const std::string dst = display_language(to.name);
  CompletionRequest r;
  r.tag = "hop:" + from.name + ">" + to.name;
  using C = ArtifactCategory;
  if (to.category == C::kSourceCode && from.category == C::kSourceCode) {
    r.system_text = "You translate programs between programming languages.";
    r.user_text = fmt::format(
        "Translate the following {} program into {}, preserving its behavior. Return only the "
        "code.\n\n{}",
        src, dst, input.body);
  } else if (to.category == C::kSourceCode) {
    r.system_text = "You write clear, self-contained programs.";
    r.user_text = fmt::format(
        "Write a {} program that implements the following description. Return only the code.\n\n"
        "Description:\n{}",
        dst, input.body);
  } else if (to.category == C::kSummary) {
    r.system_text = "You write detailed summaries of programs.";
    r.user_text = fmt::format(
        "Write a detailed summary of the following {} program. Cover its business purpose, its "
        "inputs and outputs, and a functional summary per function, including implementation "
        "details.\n\n{}",
        src, input.body);
  } else {
    r.system_text = "You write precise, language-independent program descriptions.";
    r.user_text = fmt::format(
        "Write a language-independent description of the program described below, as an "
        "imperative task statement followed by numbered steps. Leave out implementation details "
        "and do not name any programming language.\n\n{}",
        input.body);
  }
  return r;
}

}  // namespace

std::string slugify(std::string_view text) {
  std::string out;
  bool dash = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (dash && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out.empty() ? "idea" : out;
}

std::string display_language(std::string_view kind_name) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"cobol", "COBOL"}, {"java", "Java"},   {"python", "Python"},       {"cpp", "C++"},
      {"c++", "C++"},     {"pli", "PL/I"},    {"pl1", "PL/I"},            {"csharp", "C#"},
      {"javascript", "JavaScript"},           {"typescript", "TypeScript"}, {"rust", "Rust"},
      {"fortran", "Fortran"}};
  if (auto it = kNames.find(lower(kind_name)); it != kNames.end()) return it->second;
  return std::string(kind_name);
}

// ---------------------------------------------------------------------------
// Corpus planning

CorpusPlan plan_corpus(std::vector<SeedConcept> seeds, double cluster_fraction_min) {
  if (seeds.empty()) throw Error(ErrorCode::kPrecondition, "corpus plan needs at least one seed");
  if (cluster_fraction_min < 0.0 || cluster_fraction_min > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "cluster fraction must lie in [0, 1]");
  }
  std::set<std::string> ids;
  for (const auto& s : seeds) {
    if (s.title.empty()) throw Error(ErrorCode::kInvalidArgument, "seed '" + s.id + "' has no title");
    if (s.target_idea_count < 1) {
      throw Error(ErrorCode::kInvalidArgument, "seed '" + s.id + "' needs target_idea_count >= 1");
    }
    if (!ids.insert(s.id).second) throw Error(ErrorCode::kDuplicate, "seed id '" + s.id + "' repeated");
  }

  const auto n = seeds.size();
  const auto needed =
      static_cast<std::size_t>(std::ceil(cluster_fraction_min * static_cast<double>(n) - 1e-9));

  // A cluster needs at least two related ideas.
  auto eligible = [](const SeedConcept& s) { return s.target_idea_count >= 2; };
  std::size_t chosen = 0;
  for (auto& s : seeds) {
    s.is_cluster_seed = s.is_cluster_seed && eligible(s);
    if (s.is_cluster_seed) ++chosen;
  }
  for (auto& s : seeds) {
    if (chosen >= needed) break;
    if (!s.is_cluster_seed && eligible(s)) {
      s.is_cluster_seed = true;
      ++chosen;
    }
  }
  if (chosen < needed) {
    throw Error(ErrorCode::kPrecondition,
                fmt::format("cannot cluster {} of {} seeds: only {} seeds have two or more ideas",
                            needed, n, chosen));
  }

  CorpusPlan plan;
  plan.cluster_fraction_min = cluster_fraction_min;
  plan.cluster_seed_count = chosen;
  plan.achieved_fraction = static_cast<double>(chosen) / static_cast<double>(n);
  for (const auto& s : seeds) {
    if (s.is_cluster_seed) plan.clustered_idea_count += s.target_idea_count;
  }
  plan.seeds = std::move(seeds);
  return plan;
}

nlohmann::json to_json(const SeedConcept& s) {
  return {{"id", s.id},
          {"title", s.title},
          {"is_cluster_seed", s.is_cluster_seed},
          {"target_idea_count", s.target_idea_count}};
}

SeedConcept seed_from_json(const nlohmann::json& j) {
  SeedConcept s;
  s.title = j.at("title").get<std::string>();
  s.id = j.value("id", slugify(s.title));
  s.is_cluster_seed = j.value("is_cluster_seed", false);
  s.target_idea_count = j.value("target_idea_count", std::size_t{1});
  return s;
}

nlohmann::json to_json(const ProgramIdea& i) {
  return {{"id", i.id}, {"seed_id", i.seed_id}, {"title", i.title}, {"one_line", i.one_line}};
}

ProgramIdea idea_from_json(const nlohmann::json& j) {
  return ProgramIdea{j.at("id").get<std::string>(), j.at("seed_id").get<std::string>(),
                     j.at("title").get<std::string>(), j.value("one_line", std::string{})};
}

nlohmann::json to_json(const CorpusPlan& p) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : p.seeds) seeds.push_back(to_json(s));
  // Fractions are stored in permille so the payload stays integer-only.
  return {{"kind", "corpus-plan"},
          {"seeds", seeds},
          {"cluster_fraction_min_permille", std::lround(p.cluster_fraction_min * 1000)},
          {"cluster_seed_count", p.cluster_seed_count},
          {"clustered_idea_count", p.clustered_idea_count},
          {"paths", p.paths},
          {"rng_seed", p.rng_seed}};
}

CorpusPlan plan_from_json(const nlohmann::json& j) {
  CorpusPlan p;
  for (const auto& s : j.at("seeds")) p.seeds.push_back(seed_from_json(s));
  p.cluster_fraction_min = j.value("cluster_fraction_min_permille", 300) / 1000.0;
  p.cluster_seed_count = j.value("cluster_seed_count", std::size_t{0});
  p.clustered_idea_count = j.value("clustered_idea_count", std::size_t{0});
  p.achieved_fraction = p.seeds.empty() ? 0.0
                                        : static_cast<double>(p.cluster_seed_count) /
                                              static_cast<double>(p.seeds.size());
  p.paths = j.value("paths", std::vector<std::vector<std::string>>{});
  p.rng_seed = j.value("rng_seed", std::uint64_t{0});
  return p;
}

// ---------------------------------------------------------------------------
// Language lint

std::vector<std::string> default_language_names() {
  return {"COBOL", "Java",    "Python", "C++",   "C#",     "JavaScript", "TypeScript", "PL/I",
          "PL/1",  "Fortran", "Rust",   "Kotlin", "Scala", "Ruby",       "Perl",       "Haskell"};
}

LanguageLint::LanguageLint() : languages_(default_language_names()) {}
LanguageLint::LanguageLint(std::vector<std::string> languages) : languages_(std::move(languages)) {}

std::vector<std::string> LanguageLint::violations(std::string_view body) const {
  std::vector<std::string> found;
  for (const auto& name : languages_) {
    if (name.empty()) continue;
    for (auto pos = body.find(name); pos != std::string_view::npos; pos = body.find(name, pos + 1)) {
      const bool left_ok = pos == 0 || !is_word_char(body[pos - 1]);
      const auto end = pos + name.size();
      const bool right_ok = end >= body.size() ||
                            (!is_word_char(body[end]) && !(name.back() == '+' && body[end] == '+'));
      if (left_ok && right_ok) {
        found.push_back(name);
        break;
      }
    }
  }
  return found;
}

void LanguageLint::check(std::string_view body) const {
  auto v = violations(body);
  if (!v.empty()) {
    throw Error(ErrorCode::kLanguageLint,
                fmt::format("description names a programming language: {}", fmt::join(v, ", ")));
  }
}

// ---------------------------------------------------------------------------
// Idea parsing

std::vector<ProgramIdea> parse_idea_list(std::string_view text, const std::string& seed_id) {
  std::vector<ProgramIdea> ideas;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = trim(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty() || line.back() == ':') continue;

    // List markers: "1.", "2)", "-", "*", "•"
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
      line = trim(line.substr(i + 1));
    } else if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) {
      line = trim(line.substr(2));
    } else if (line.rfind("•", 0) == 0) {
      line = trim(line.substr(3));
    }
    auto unquote = [](std::string s) {
      if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
      return trim(s);
    };
    line = unquote(line);
    if (line.empty()) continue;

    std::string title = line;
    std::string one_line;
    for (std::string_view sep : {" - ", " \u2013 ", " \u2014 ", ": "}) {
      if (auto at = line.find(sep); at != std::string::npos) {
        title = unquote(line.substr(0, at));
        one_line = unquote(line.substr(at + sep.size()));
        break;
      }
    }
    title.erase(std::remove(title.begin(), title.end(), '*'), title.end());
    title = trim(title);
    if (title.empty()) continue;
    ideas.push_back(ProgramIdea{seed_id + "/" + slugify(title), seed_id, title, one_line});
  }
  return ideas;
}

// ---------------------------------------------------------------------------
// Corpus

std::string Corpus::fingerprint() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    ids.insert(e.description.id);
    for (const auto& [key, run] : e.runs) {
      for (const auto& a : run.artifacts) ids.insert(a.id);
    }
  }
  std::string joined;
  for (const auto& id : ids) joined += id + "\n";
  return sha256_hex(joined);
}

std::size_t Corpus::artifact_count() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    ids.insert(e.description.id);
    for (const auto& [key, run] : e.runs) {
      for (const auto& a : run.artifacts) ids.insert(a.id);
    }
  }
  return ids.size();
}

nlohmann::json to_json(const Corpus& c) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : c.entries) {
    nlohmann::json runs = nlohmann::json::object();
    for (const auto& [key, run] : e.runs) {
      nlohmann::json ids = nlohmann::json::array();
      for (const auto& a : run.artifacts) ids.push_back(a.id);
      nlohmann::json failure = nullptr;
      if (run.failure) {
        failure = {{"hop", run.failure->hop},
                   {"code", to_string(run.failure->code)},
                   {"message", run.failure->message}};
      }
      runs[key] = {{"artifacts", ids}, {"failure", failure}};
    }
    entries.push_back({{"idea", to_json(e.idea)},
                       {"cluster", e.cluster},
                       {"description", e.description.id},
                       {"runs", runs}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : c.failures) {
    failures.push_back({{"idea_id", f.idea_id}, {"stage", f.stage}, {"message", f.message}});
  }
  return {{"kind", "corpus"},
          {"plan", to_json(c.plan)},
          {"entries", entries},
          {"failures", failures},
          {"fingerprint", c.fingerprint()}};
}

Corpus corpus_from_json(const nlohmann::json& j, const ArtifactRepository& repo) {
  Corpus c;
  c.plan = plan_from_json(j.at("plan"));
  for (const auto& e : j.at("entries")) {
    CorpusEntry entry;
    entry.idea = idea_from_json(e.at("idea"));
    entry.cluster = e.value("cluster", false);
    entry.description = repo.get(e.at("description").get<std::string>());
    for (const auto& [key, run] : e.at("runs").items()) {
      PathRun r;
      r.path_key = key;
      for (const auto& id : run.at("artifacts")) r.artifacts.push_back(repo.get(id.get<std::string>()));
      if (!run.at("failure").is_null()) {
        const auto& f = run["failure"];
        r.failure = HopFailure{f.at("hop").get<std::size_t>(),
                               parse_error_code(f.at("code").get<std::string>()),
                               f.at("message").get<std::string>()};
      }
      entry.runs.emplace(key, std::move(r));
    }
    c.entries.push_back(std::move(entry));
  }
  for (const auto& f : j.value("failures", nlohmann::json::array())) {
    c.failures.push_back(EntryFailure{f.at("idea_id").get<std::string>(),
                                      f.at("stage").get<std::string>(),
                                      f.at("message").get<std::string>()});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline

BenchmarkPipeline::BenchmarkPipeline(const GenerationGraph& graph, ProviderRegistry providers,
                                     ArtifactRepository& repo, PipelineOptions options)
    : graph_(graph), providers_(std::move(providers)), repo_(repo), options_(std::move(options)) {
  for (const auto& rec : repo_.store().records(RecordType::kPlan)) {
    const auto j = rec.json();
    if (j.value("kind", "") != "idea-list") continue;
    std::vector<ProgramIdea> ideas;
    for (const auto& i : j.at("ideas")) ideas.push_back(idea_from_json(i));
    idea_cache_.emplace(j.at("generation_key").get<std::string>(), std::move(ideas));
  }
}

std::vector<ProgramIdea> BenchmarkPipeline::expand_seed(const SeedConcept& seed, Provider& provider,
                                                        std::size_t count, std::uint64_t variation) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "idea count must be >= 1");
  if (seed.title.empty()) throw Error(ErrorCode::kInvalidArgument, "seed title must be non-empty");

  const std::string key = digest_fields(
      {"expand", seed.id, seed.title, seed.is_cluster_seed ? "cluster" : "single",
       std::to_string(count), provider.profile().name, provider.profile().model_name,
       std::to_string(variation)});
  {
    std::lock_guard lock(idea_mu_);
    if (auto it = idea_cache_.find(key); it != idea_cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }

  std::vector<ProgramIdea> ideas;
  std::set<std::string> seen_titles;
  std::set<std::string> used_ids;
  std::vector<std::string> avoid;
  for (std::size_t round = 0;; ++round) {
    const auto reply = provider.complete(expansion_request(seed, count - ideas.size(), avoid, variation));
    for (auto& idea : parse_idea_list(reply.text, seed.id)) {
      if (ideas.size() == count) break;
      if (!seen_titles.insert(lower(idea.title)).second) continue;
      std::string id = idea.id;
      for (int suffix = 2; used_ids.count(id); ++suffix) id = idea.id + "-" + std::to_string(suffix);
      idea.id = id;
      used_ids.insert(id);
      avoid.push_back(idea.title);
      ideas.push_back(std::move(idea));
    }
    if (ideas.size() == count) break;
    if (round >= options_.idea_retry_bound) {
      throw Error(ErrorCode::kDuplicateIdeas,
                  fmt::format("seed '{}': only {} distinct ideas of {} after {} attempt(s)",
                              seed.title, ideas.size(), count, round + 1));
    }
  }

  nlohmann::json list = nlohmann::json::array();
  for (const auto& i : ideas) list.push_back(to_json(i));
  repo_.store().put(RecordType::kPlan, {{"kind", "idea-list"},
                                        {"generation_key", key},
                                        {"seed", to_json(seed)},
                                        {"ideas", list}});
  std::lock_guard lock(idea_mu_);
  idea_cache_.emplace(key, ideas);
  return ideas;
}

Artifact BenchmarkPipeline::elaborate_idea(const ProgramIdea& idea, Provider& provider) {
  const std::string key =
      digest_fields({"elaborate", idea.id, idea.title, idea.one_line, provider.profile().name,
                     provider.profile().model_name});
  if (auto cached = repo_.by_generation_key(key)) {
    ++cache_hits_;
    return *cached;
  }
  const auto reply = provider.complete(elaboration_request(idea));
  std::string body = trim(strip_fence(reply.text));
  if (body.empty()) throw Error(ErrorCode::kProviderFailure, "empty description for " + idea.id);
  options_.lint.check(body);

  Lineage lineage;
  lineage.idea_id = idea.id;
  lineage.path = options_.description_kind;
  lineage.labels = {std::string(to_string(EdgeLabel::kStrong))};
  lineage.providers = {provider.profile().name};
  lineage.derivation = "elaboration";
  return repo_.put(make_artifact(options_.description_kind, std::move(body), std::move(lineage), key));
}

PathRun BenchmarkPipeline::run_path(const Artifact& start, const GenPath& path) {
  PathRun run;
  run.artifacts.push_back(start);
  if (path.edges.empty()) {
    run.path_key = path.kinds.empty() ? start.kind : graph_.describe(path);
    return run;
  }
  const GenPath checked = graph_.make_path(path.edges);
  run.path_key = graph_.describe(checked);
  if (graph_.kind(checked.kinds.front()).name != start.kind) {
    throw Error(ErrorCode::kPrecondition, "path " + run.path_key + " does not start at kind '" +
                                              start.kind + "'");
  }
  for (auto e : checked.edges) resolve_provider(providers_, graph_.edge(e).provider_binding);

  Lineage lineage = start.lineage;
  lineage.parent.reset();
  for (std::size_t hop = 0; hop < checked.edges.size(); ++hop) {
    const GenEdge& edge = graph_.edge(checked.edges[hop]);
    const ArtifactKind& from = graph_.kind(edge.from);
    const ArtifactKind& to = graph_.kind(edge.to);
    Provider& provider = resolve_provider(providers_, edge.provider_binding);
    const Artifact& current = run.artifacts.back();

    const std::string key = digest_fields({"hop", current.id, from.name, to.name,
                                           to_string(edge.label), provider.profile().name,
                                           provider.profile().model_name});
    if (edge.label == EdgeLabel::kStrong) {
      if (auto cached = repo_.by_generation_key(key)) {
        ++cache_hits_;
        run.artifacts.push_back(*cached);
        continue;
      }
    }

    try {
      const auto reply = provider.complete(hop_request(from, to, current));
      std::string body = strip_fence(reply.text);
      if (trim(body).empty()) {
        throw Error(ErrorCode::kProviderFailure, "empty generation for " + from.name + " -> " + to.name);
      }
      Lineage next;
      next.idea_id = start.lineage.idea_id;
      GenPath walked;
      walked.kinds.assign(checked.kinds.begin(), checked.kinds.begin() + static_cast<long>(hop) + 2);
      next.path = graph_.describe(walked);
      for (std::size_t k = 0; k <= hop; ++k) {
        const GenEdge& ek = graph_.edge(checked.edges[k]);
        next.edge_ids.push_back(ek.id.value);
        next.labels.emplace_back(to_string(ek.label));
        next.providers.push_back(ek.provider_binding);
      }
      next.parent = current.id;
      next.derivation = "generation";
      run.artifacts.push_back(repo_.put(make_artifact(to.name, std::move(body), std::move(next), key)));
    } catch (const Error& e) {
      run.failure = HopFailure{hop, e.code(), e.what()};
      break;
    }
  }
  return run;
}

CorpusEntry BenchmarkPipeline::build_entry(const ProgramIdea& idea, bool cluster,
                                           const std::vector<GenPath>& paths, Provider& provider,
                                           std::vector<EntryFailure>& failures) {
  CorpusEntry entry;
  entry.idea = idea;
  entry.cluster = cluster;
  entry.description = elaborate_idea(idea, provider);
  for (const auto& p : paths) {
    PathRun run = run_path(entry.description, p);
    if (run.failure) {
      failures.push_back(EntryFailure{idea.id, "path:" + run.path_key, run.failure->message});
    }
    entry.runs.emplace(run.path_key, std::move(run));
  }
  return entry;
}

Corpus BenchmarkPipeline::generate_corpus(const CorpusPlan& plan) {
  Provider& provider = resolve_provider(providers_, options_.idea_provider);
  std::vector<GenPath> paths;
  for (const auto& names : plan.paths) {
    GenPath p = graph_.path_by_names(names, EdgeLabel::kStrong);
    const auto report = graph_.validate_plan(p, PlanPurpose::kGeneration);
    if (!report.valid) throw Error(ErrorCode::kPrecondition, report.diagnostic);
    if (names.front() != options_.description_kind) {
      throw Error(ErrorCode::kPrecondition,
                  "corpus paths must start at '" + options_.description_kind + "'");
    }
    paths.push_back(std::move(p));
  }

  Corpus corpus;
  corpus.plan = plan;
  struct Job {
    ProgramIdea idea;
    bool cluster;
  };
  std::vector<Job> jobs;
  for (const auto& seed : plan.seeds) {
    try {
      for (auto& idea : expand_seed(seed, provider, seed.target_idea_count, plan.rng_seed)) {
        jobs.push_back(Job{std::move(idea), seed.is_cluster_seed});
      }
    } catch (const Error& e) {
      corpus.failures.push_back(EntryFailure{seed.id, "expand", e.what()});
    }
  }

  std::vector<std::optional<CorpusEntry>> built(jobs.size());
  std::vector<std::vector<EntryFailure>> job_failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        built[i] = build_entry(jobs[i].idea, jobs[i].cluster, paths, provider, job_failures[i]);
      } catch (const Error& e) {
        job_failures[i].push_back(EntryFailure{jobs[i].idea.id, "elaborate", e.what()});
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options_.max_parallel_entries, jobs.size()));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (built[i]) corpus.entries.push_back(std::move(*built[i]));
    for (auto& f : job_failures[i]) corpus.failures.push_back(std::move(f));
  }
  return corpus;
}

HumanEdit apply_human_edit(ArtifactRepository& repo, const std::string& artifact_id, std::string body,
                           const std::string& editor, const LanguageLint& lint) {
  const auto original = repo.get(artifact_id);
  if (editor.empty()) throw Error(ErrorCode::kInvalidArgument, "an edit needs an editor name");
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "edited body is empty");
  }
  if (body == original.body) throw Error(ErrorCode::kInvalidArgument, "edit leaves " + artifact_id + " unchanged");
  if (original.kind == "description") lint.check(body);

  Lineage lineage = original.lineage;
  lineage.parent = original.id;
  lineage.derivation = "human-edit";
  HumanEdit out;
  out.edited = repo.put(make_artifact(original.kind, std::move(body), std::move(lineage)));
  out.approval_record_id = repo.store().put(
      RecordType::kPlan,
      {{"kind", "human-edit"}, {"artifact_id", original.id}, {"edited_id", out.edited.id}, {"editor", editor}});
  return out;
}

}  // namespace forge
