#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/artifact.hpp"
#include "forge/bootstrap.hpp"
#include "forge/claims.hpp"
#include "forge/compose.hpp"
#include "forge/error.hpp"
#include "forge/graph.hpp"
#include "forge/judge.hpp"
#include "forge/labels.hpp"
#include "forge/metrics.hpp"
#include "forge/perturb.hpp"
#include "forge/pipeline.hpp"
#include "forge/provider.hpp"
#include "forge/sampling.hpp"
#include "forge/scale.hpp"
#include "forge/server.hpp"
#include "forge/store.hpp"

namespace forge::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "description>cobol>summary,description>java>summary"
std::vector<std::vector<std::string>> parse_paths(const std::string& spec) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : split(spec, ',')) out.push_back(split(p, '>'));
  return out;
}

std::vector<std::string> path_keys(const std::vector<std::vector<std::string>>& paths) {
  std::vector<std::string> keys;
  for (const auto& p : paths) {
    std::string key;
    for (const auto& k : p) key += (key.empty() ? "" : ">") + k;
    keys.push_back(key);
  }
  return keys;
}

// Ids from a JSON array file or one id per line.
std::vector<std::string> read_ids(const std::string& path) {
  const auto text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return nlohmann::json::parse(text).get<std::vector<std::string>>();
  std::vector<std::string> ids;
  for (auto& line : split(text, '\n')) {
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::map<std::string, int> read_scores(const std::string& path) {
  return read_json(path).get<std::map<std::string, int>>();
}

std::map<std::string, std::int64_t> parse_counts(const std::string& spec) {
  std::map<std::string, std::int64_t> out;
  for (const auto& kv : split(spec, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kParse, "expected name=value, got " + kv);
    out[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
  }
  return out;
}

std::vector<std::int64_t> parse_vector(const std::string& spec) {
  std::vector<std::int64_t> out;
  for (const auto& v : split(spec, ',')) out.push_back(std::stoll(v));
  return out;
}

// Kinds description, cobol, java, python, summary with Strong generation edges
// and Tested summarization edges.
GenerationGraph default_graph() {
  GenerationGraph g;
  const auto d = g.add_kind("description", ArtifactCategory::kNaturalLanguage);
  const auto s = g.add_kind("summary", ArtifactCategory::kSummary);
  std::vector<KindId> langs;
  for (const char* name : {"cobol", "java", "python"}) langs.push_back(g.add_kind(name, ArtifactCategory::kSourceCode));
  for (auto l : langs) {
    g.add_edge(d, l, EdgeLabel::kStrong, "strong");
    g.add_edge(l, s, EdgeLabel::kStrong, "strong");
    g.add_edge(l, s, EdgeLabel::kTested, "tested");
  }
  for (auto a : langs) {
    for (auto b : langs) {
      if (a != b) g.add_edge(a, b, EdgeLabel::kStrong, "strong");
    }
  }
  g.add_edge(s, d, EdgeLabel::kStrong, "strong");
  return g;
}

class Session {
 public:
  explicit Session(const GlobalOptions& options) : options_(options) {}

  Store& store() {
    if (!store_) {
      store_ = std::make_unique<Store>(options_.store_dir.empty() ? Store::default_dir()
                                                                  : std::filesystem::path(options_.store_dir));
      for (const auto& q : store_->quarantined()) {
        spdlog::warn("store line {} quarantined: {}", q.line, q.reason);
      }
    }
    return *store_;
  }

  ArtifactRepository& repo() {
    if (!repo_) repo_ = std::make_unique<ArtifactRepository>(store());
    return *repo_;
  }

  const GenerationGraph& graph() {
    if (!graph_) {
      graph_ = std::make_unique<GenerationGraph>(options_.graph_file.empty() ? default_graph()
                                                                             : parse_graph(read_file(options_.graph_file)));
    }
    return *graph_;
  }

  ProviderRegistry& providers() {
    if (!providers_) {
      if (options_.providers_file.empty()) {
        throw Error(ErrorCode::kPrecondition, "this command calls models; pass --providers <file>");
      }
      providers_ = std::make_unique<ProviderRegistry>(load_providers(read_json(options_.providers_file)));
    }
    return *providers_;
  }

  BenchmarkPipeline& pipeline() {
    if (!pipeline_) pipeline_ = std::make_unique<BenchmarkPipeline>(graph(), providers(), repo());
    return *pipeline_;
  }

  VerdictCache& verdicts() {
    if (!verdicts_) verdicts_ = std::make_unique<VerdictCache>(&store());
    return *verdicts_;
  }

  JudgeConfig judge_config(const std::string& name) {
    std::optional<JudgeConfig> found;
    for (const auto& rec : store().records(RecordType::kJudge)) {
      const auto j = rec.json();
      if (j.value("name", std::string()) == name && j.contains("task")) found = judge_config_from_json(j);
    }
    if (!found) throw Error(ErrorCode::kNotFound, "no judge named " + name + "; run `forge judge define` first");
    return *found;
  }

  Judge& judge(const std::string& name) {
    auto it = judges_.find(name);
    if (it != judges_.end()) return *it->second;
    auto config = judge_config(name);
    auto& provider = resolve_provider(providers(), config.provider);
    return *judges_.emplace(name, std::make_unique<Judge>(std::move(config), provider, &verdicts())).first->second;
  }

  Corpus corpus(const std::string& id) {
    const auto rec = store().get(id);
    const auto j = rec.json();
    if (j.value("kind", std::string()) != "corpus") throw Error(ErrorCode::kInvalidArgument, id + " is not a corpus");
    return corpus_from_json(j, repo());
  }

  ClaimDataset dataset(const std::string& id) {
    const auto rec = store().get(id);
    if (rec.type != RecordType::kDataset) throw Error(ErrorCode::kInvalidArgument, id + " is not a dataset");
    return claim_dataset_from_json(rec.json());
  }

  void emit(const nlohmann::json& record, const std::string& table) const {
    if (options_.format == "records") {
      std::cout << canonical_json(record) << "\n";
    } else {
      std::cout << table;
      if (!table.empty() && table.back() != '\n') std::cout << "\n";
    }
  }

 private:
  const GlobalOptions& options_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<ArtifactRepository> repo_;
  std::unique_ptr<GenerationGraph> graph_;
  std::unique_ptr<ProviderRegistry> providers_;
  std::unique_ptr<BenchmarkPipeline> pipeline_;
  std::unique_ptr<VerdictCache> verdicts_;
  std::map<std::string, std::unique_ptr<Judge>> judges_;
};

std::string selection_table(const SelectionResult& sel) {
  std::string out = fmt::format("{:<20} {:>10} {:>8} {:>8} {:>8}\n", "judge", "score", "raw", "pairs", "failed");
  for (const auto& [name, s] : sel.scores) {
    out += fmt::format("{:<20} {:>10.4f} {:>8} {:>8} {:>8}{}\n", name, s.normalized.to_double(), s.raw_sum, s.pairs,
                       s.failed, name == sel.best ? "  <- best" : "");
  }
  return out;
}

nlohmann::json selection_json(const SelectionResult& sel) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [name, s] : sel.scores) {
    scores[name] = {{"normalized", s.normalized}, {"raw_sum", s.raw_sum}, {"pairs", s.pairs},
                    {"failed", s.failed},         {"wrong", s.wrong}};
  }
  return {{"kind", "judge-selection"}, {"best", sel.best}, {"scores", scores}};
}

// ---------------------------------------------------------------------------

void add_graph(CLI::App& app, Session& session, int& exit_code) {
  auto* graph = app.add_subcommand("graph", "generation graph tools")->require_subcommand(1);
  auto* validate = graph->add_subcommand("validate", "parse a graph file and check plans against it");
  static std::string file;
  static std::vector<std::string> plans;
  static std::string purpose = "generation";
  validate->add_option("file", file, "graph file")->required()->check(CLI::ExistingFile);
  validate->add_option("--plan", plans, "kind path such as description>cobol>summary (repeatable)");
  validate->add_option("--purpose", purpose, "generation or test")->check(CLI::IsMember({"generation", "test"}));
  static std::vector<std::string> labels;
  validate->add_option("--labels", labels, "per-hop labels for every --plan (Strong,Tested,...)");
  validate->callback([&session, &exit_code] {
    const auto g = parse_graph(read_file(file));
    nlohmann::json out{{"kind", "graph-validation"}, {"kinds", g.node_count()}, {"edges", g.edge_count()}};
    std::string table = fmt::format("graph ok: {} kinds, {} edges\n", g.node_count(), g.edge_count());
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& plan : plans) {
      const auto names = split(plan, '>');
      GenPath path;
      if (labels.empty()) {
        path = g.path_by_names(names, purpose == "test" ? EdgeLabel::kTested : EdgeLabel::kStrong);
      } else {
        std::vector<EdgeLabel> ls;
        for (const auto& l : split(labels.front(), ',')) ls.push_back(parse_label(l));
        path = g.path_by_names(names, ls);
      }
      const auto r = g.validate_plan(path, purpose == "test" ? PlanPurpose::kTest : PlanPurpose::kGeneration);
      reports.push_back({{"plan", plan},
                         {"valid", r.valid},
                         {"tested_edges", r.tested_edge_indices},
                         {"reusable_prefix_edges", r.reusable_prefix_edges},
                         {"diagnostic", r.diagnostic}});
      table += fmt::format("{}: {}{}\n", plan, r.valid ? "valid" : "INVALID",
                           r.diagnostic.empty() ? "" : " (" + r.diagnostic + ")");
      if (!r.valid) exit_code = kExitNegative;
    }
    out["plans"] = reports;
    session.emit(out, table);
  });
}

void add_corpus(CLI::App& app, Session& session) {
  auto* corpus = app.add_subcommand("corpus", "plan and generate benchmark corpora")->require_subcommand(1);
  static std::string seeds_file, paths_spec = "description>cobol>summary,description>java>summary,description>python>summary";
  static std::uint64_t rng_seed = 0;
  static double cluster_fraction = 0.30;
  static std::vector<std::string> judges;
  static bool symmetry = true;

  auto common = [](CLI::App* cmd) {
    cmd->add_option("--seeds", seeds_file, "seed concepts (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--paths", paths_spec, "comma-separated kind paths");
    cmd->add_option("--rng-seed", rng_seed, "random seed");
    cmd->add_option("--cluster-fraction", cluster_fraction, "minimum share of cluster seeds");
  };
  auto make_plan = [] {
    const auto j = read_json(seeds_file);
    const auto& list = j.is_array() ? j : j.at("seeds");
    std::vector<SeedConcept> seeds;
    for (const auto& s : list) seeds.push_back(seed_from_json(s));
    auto plan = plan_corpus(std::move(seeds), cluster_fraction);
    plan.paths = parse_paths(paths_spec);
    plan.rng_seed = rng_seed;
    return plan;
  };
  auto corpus_table = [](const Corpus& c, const std::string& id, BenchmarkPipeline& p) {
    std::size_t calls = 0;
    for (const auto& [name, provider] : p.providers()) calls += provider->call_count();
    return fmt::format("corpus {}\nfingerprint {}\nentries {}  artifacts {}  failures {}\nprovider calls {}  cache hits {}\n",
                       id, c.fingerprint(), c.entries.size(), c.artifact_count(), c.failures.size(), calls,
                       p.cache_hits());
  };

  auto* plan = corpus->add_subcommand("plan", "choose cluster seeds and record the plan");
  common(plan);
  plan->callback([&session, make_plan] {
    const auto p = make_plan();
    const auto id = session.store().put(RecordType::kPlan, to_json(p));
    session.emit(to_json(p), fmt::format("plan {}\nseeds {}  cluster seeds {}  clustered ideas {}  fraction {:.3f}\n", id,
                                         p.seeds.size(), p.cluster_seed_count, p.clustered_idea_count,
                                         p.achieved_fraction));
  });

  auto* generate = corpus->add_subcommand("generate", "generate ideas, descriptions and path artifacts");
  common(generate);
  generate->callback([&session, make_plan, corpus_table] {
    auto& pipeline = session.pipeline();
    const auto c = pipeline.generate_corpus(make_plan());
    const auto j = to_json(c);
    const auto id = session.store().put(RecordType::kPlan, j);
    auto out = j;
    out["record_id"] = id;
    session.emit(out, corpus_table(c, id, pipeline));
  });

  auto* regenerate = corpus->add_subcommand("regenerate", "regenerate under a fresh seed and re-score judges");
  common(regenerate);
  regenerate->add_option("--judge", judges, "judge to re-score (repeatable)");
  regenerate->add_flag("!--no-symmetry", symmetry, "omit reversed pairs from the dataset");
  regenerate->callback([&session, make_plan, corpus_table] {
    auto& pipeline = session.pipeline();
    auto plan = make_plan();
    DatasetOptions options;
    options.include_symmetry = symmetry;
    const auto keys = path_keys(plan.paths);
    if (judges.empty()) {
      const auto c = pipeline.generate_corpus(plan);
      const auto id = session.store().put(RecordType::kPlan, to_json(c));
      options.false_pairs.rng_seed = rng_seed;
      const auto d = build_claim_dataset(c, keys, options);
      const auto did = session.store().put(RecordType::kDataset, to_json(d));
      session.emit({{"corpus", id}, {"dataset", did}, {"pairs", d.pairs.size()}},
                   corpus_table(c, id, pipeline) + fmt::format("dataset {} ({} pairs)\n", did, d.pairs.size()));
      return;
    }
    std::map<std::string, Judge*> js;
    for (const auto& name : judges) js[name] = &session.judge(name);
    const auto fresh = regenerate_fresh(pipeline, plan, rng_seed, js, keys, options);
    const auto cid = session.store().put(RecordType::kPlan, to_json(fresh.corpus));
    const auto did = session.store().put(RecordType::kDataset, to_json(fresh.dataset));
    auto out = selection_json(fresh.selection);
    out["corpus"] = cid;
    out["dataset"] = did;
    session.emit(out, corpus_table(fresh.corpus, cid, pipeline) + fmt::format("dataset {}\n", did) +
                          selection_table(fresh.selection));
  });

  auto* dataset = corpus->add_subcommand("dataset", "build a labeled claim dataset from a stored corpus");
  static std::string corpus_id;
  static std::size_t ratio = 1;
  static bool skip_pairs = false;
  dataset->add_option("--corpus", corpus_id, "corpus record id")->required();
  dataset->add_option("--paths", paths_spec, "comma-separated kind paths");
  dataset->add_option("--rng-seed", rng_seed, "false-pair sampling seed");
  dataset->add_option("--false-ratio", ratio, "false pairs per true pair");
  dataset->add_flag("!--no-symmetry", symmetry, "omit reversed pairs");
  dataset->add_flag("--skip-pairs", skip_pairs, "drop only pairs touching a missing summary");
  dataset->callback([&session] {
    DatasetOptions options;
    options.include_symmetry = symmetry;
    options.missing = skip_pairs ? MissingPolicy::kSkipPairs : MissingPolicy::kSkipDescription;
    options.false_pairs.ratio = ratio;
    options.false_pairs.rng_seed = rng_seed;
    const auto d = build_claim_dataset(session.corpus(corpus_id), path_keys(parse_paths(paths_spec)), options);
    const auto id = session.store().put(RecordType::kDataset, to_json(d));
    session.emit({{"dataset", id}, {"true", d.true_count()}, {"false", d.false_count()}, {"missing", d.missing.size()}},
                 fmt::format("dataset {}\ntrue {}  false {}  missing summaries {}\n", id, d.true_count(),
                             d.false_count(), d.missing.size()));
  });
}

void add_perturb(CLI::App& app, Session& session) {
  auto* cmd = app.add_subcommand("perturb", "make semantics-preserving variants of a code artifact");
  static std::string artifact, kind;
  static std::size_t n = 3;
  static std::uint64_t seed = 0;
  cmd->add_option("--artifact", artifact, "source artifact id")->required();
  cmd->add_option("--kind", kind, "rename-identifiers | reorder-independent-statements | comment-noise")->required();
  cmd->add_option("-n", n, "number of variants");
  cmd->add_option("--rng-seed", seed, "random seed");
  cmd->callback([&session] {
    const auto source = session.repo().get(artifact);
    ArtifactCategory category = ArtifactCategory::kSourceCode;
    if (auto k = session.graph().find_kind(source.kind)) category = session.graph().kind(*k).category;
    const auto set = perturb(source, parse_perturbation_kind(kind), n, seed, category);
    for (const auto& m : set.members) session.repo().put(m);
    auto j = to_json(set);
    j["kind"] = "perturbation-set";
    const auto id = session.store().put(RecordType::kPlan, j);
    std::string table = fmt::format("perturbation set {} ({})\n", id, kind);
    for (const auto& m : set.members) table += m.id + "\n";
    session.emit(j, table);
  });
}

void add_edit(CLI::App& app, Session& session) {
  auto* cmd = app.add_subcommand("edit", "record a reviewer's edit of a stored artifact");
  static std::string artifact, body_file, editor;
  cmd->add_option("--artifact", artifact, "artifact id")->required();
  cmd->add_option("--body-file", body_file, "file with the edited body")->required()->check(CLI::ExistingFile);
  cmd->add_option("--editor", editor, "who approved the edit")->required();
  cmd->callback([&session] {
    const auto e = apply_human_edit(session.repo(), artifact, read_file(body_file), editor);
    session.emit({{"kind", "human-edit"}, {"artifact_id", artifact}, {"edited_id", e.edited.id},
                  {"approval", e.approval_record_id}},
                 fmt::format("edited {} -> {}\n", artifact, e.edited.id));
  });
}

void add_compose(CLI::App& app, Session& session) {
  auto* cmd = app.add_subcommand("compose", "combine small programs into one large program");
  static std::string units, order;
  cmd->add_option("--units", units, "comma-separated artifact ids")->required();
  cmd->add_option("--order", order, "call order as a permutation, e.g. 2,0,1");
  cmd->callback([&session] {
    std::vector<Artifact> arts;
    for (const auto& id : split(units, ',')) arts.push_back(session.repo().get(id));
    std::vector<std::size_t> perm;
    for (const auto& v : split(order, ',')) perm.push_back(std::stoul(v));
    auto [composed, record] = compose_large(arts, perm);
    composed = session.repo().put(composed);
    auto j = to_json(record);
    j["kind"] = "composition";
    session.store().put(RecordType::kPlan, j);
    session.emit(j, fmt::format("composed {} from {} units\n", composed.id, arts.size()));
  });
}

void add_judge(CLI::App& app, Session& session) {
  auto* judge = app.add_subcommand("judge", "define and run judges")->require_subcommand(1);
  static std::string name, task = "similarity-pair", scale = "similarity", provider = "tested", template_id,
                     template_file, dataset_id, label_filter = "all";
  static bool reasoning = false;

  auto* define = judge->add_subcommand("define", "record a judge configuration");
  define->add_option("--judge", name, "judge name")->required();
  define->add_option("--task", task, "score-single | compare-pair | similarity-pair");
  define->add_option("--scale", scale, "built-in scale name or scale JSON file");
  define->add_option("--provider", provider, "provider profile name");
  define->add_option("--template-id", template_id, "built-in prompt template");
  define->add_option("--template-file", template_file, "custom prompt template");
  define->add_flag("--reasoning", reasoning, "ask for reasoning before the score");
  define->callback([&session] {
    JudgeConfig c;
    c.name = name;
    c.task = parse_judge_task(task);
    c.scale = std::filesystem::exists(scale) ? scale_from_json(read_json(scale)) : builtin_scale(scale);
    c.provider = provider;
    c.prompt_template_id = template_id.empty() ? default_template_id(c.task) : template_id;
    if (!template_file.empty()) c.template_text = read_file(template_file);
    c.require_reasoning = reasoning;
    const auto id = session.store().put(RecordType::kJudge, to_json(c));
    session.store().put(RecordType::kScale, to_json(c.scale));
    session.emit(to_json(c), fmt::format("judge {} recorded as {}\nfingerprint {}\n", c.name, id, c.fingerprint()));
  });

  auto* run = judge->add_subcommand("run", "score a judge on a claim dataset");
  run->add_option("--judge", name, "judge name")->required();
  run->add_option("--dataset", dataset_id, "dataset record id")->required();
  run->add_option("--labels", label_filter, "histogram over true, false or all pairs")
      ->check(CLI::IsMember({"true", "false", "all"}));
  run->callback([&session] {
    auto& j = session.judge(name);
    const auto d = session.dataset(dataset_id);
    const auto score = judge_selection_score(verdict_with(j, session.repo()), d.pairs);
    std::vector<ScoreHistogram> rows;
    if (label_filter != "false") rows.push_back(score_histogram(j, session.repo(), d, true));
    if (label_filter != "true") rows.push_back(score_histogram(j, session.repo(), d, false));
    rows.back().judge = rows.back().judge + (label_filter == "all" ? " (false)" : "");
    if (label_filter == "all") rows.front().judge += " (true)";
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : rows) hist.push_back({{"judge", h.judge}, {"counts", h.counts}, {"failed", h.failed}});
    session.emit({{"kind", "judge-run"},
                  {"judge", name},
                  {"dataset", dataset_id},
                  {"normalized", score.normalized},
                  {"raw_sum", score.raw_sum},
                  {"pairs", score.pairs},
                  {"failed", score.failed},
                  {"histograms", hist}},
                 fmt::format("{}: score {} ({:.4f}) over {} pairs, {} parse failures\n", name, score.normalized.str(),
                             score.normalized.to_double(), score.pairs, score.failed) +
                     format_histograms(rows));
  });
}

void add_metrics(CLI::App& app, Session& session) {
  auto* metrics = app.add_subcommand("metrics", "consistency metrics")->require_subcommand(1);
  static std::string human, judge_scores, scores, counts, ref, weights, dataset_id;
  static std::vector<std::string> judges;
  static std::size_t n = 0;
  static std::uint64_t seed = 0;

  auto report = [&session](const AgreementReport& r) { session.emit(to_json(r), format_table(r)); };
  auto plan_for = [](std::vector<std::string> population, std::size_t arity) {
    SamplePlan p;
    p.population = std::move(population);
    p.n = n;
    p.arity = arity;
    p.rng_seed = seed;
    return p;
  };

  auto* agreement = metrics->add_subcommand("agreement", "pairwise order agreement with human ranks");
  agreement->add_option("--human", human, "human ranks (JSON id -> rank)")->required();
  agreement->add_option("--judge-scores", judge_scores, "judge ranks (JSON id -> rank)")->required();
  agreement->add_option("-n", n, "sample size (0 = exhaustive)");
  agreement->add_option("--rng-seed", seed, "sampling seed");
  agreement->callback([&session, plan_for] {
    RankAssignment h{"human", read_scores(human)};
    RankAssignment j{"judge", read_scores(judge_scores)};
    const auto cmp = compare_from_scores(j.ranks);
    std::vector<std::string> keys;
    for (const auto& [k, v] : h.ranks) keys.push_back(k);
    auto r = n == 0 ? pairwise_order_agreement(h, cmp) : pairwise_order_agreement(h, cmp, plan_for(keys, 2));
    auto out = to_json(r);
    std::string table = format_table(r);
    if (h.ranks.size() == j.ranks.size()) {
      const auto distance = absolute_rank_distance(h, j);
      out["absolute_rank_distance"] = distance;
      table += fmt::format("absolute rank distance {}\n", distance);
    }
    session.emit(out, table);
  });

  auto* transitivity = metrics->add_subcommand("transitivity", "transitivity of a scoring-induced judge");
  transitivity->add_option("--scores", scores, "judge ranks (JSON id -> rank)")->required();
  transitivity->add_option("-n", n, "sample size (0 = every triple)");
  transitivity->add_option("--rng-seed", seed, "sampling seed");
  transitivity->callback([report, plan_for] {
    const auto s = read_scores(scores);
    std::vector<std::string> keys;
    for (const auto& [k, v] : s) keys.push_back(k);
    const auto cmp = compare_from_scores(s);
    report(n == 0 ? transitivity_score(cmp, all_tuples(keys, 3)) : transitivity_score(cmp, plan_for(keys, 3)));
  });

  auto* symmetry = metrics->add_subcommand("symmetry", "verdict symmetry of a judge on a dataset");
  symmetry->add_option("--judge", judges, "judge name")->required()->expected(1);
  symmetry->add_option("--dataset", dataset_id, "dataset record id")->required();
  symmetry->callback([&session, report] {
    const auto d = session.dataset(dataset_id);
    std::vector<OrderedPair> pairs;
    for (const auto& p : d.pairs) {
      if (p.a < p.b) pairs.emplace_back(p.a, p.b);
    }
    report(symmetry_score(verdict_with(session.judge(judges.front()), session.repo()), pairs));
  });

  auto* jaccard = metrics->add_subcommand("jaccard", "weighted Jaccard between two error-count vectors");
  jaccard->add_option("--counts", counts, "comma-separated counts")->required();
  jaccard->add_option("--ref", ref, "comma-separated reference counts")->required();
  jaccard->callback([&session] {
    const auto a = parse_vector(counts);
    const auto b = parse_vector(ref);
    const auto j = weighted_jaccard(a, b);
    const auto dist = weighted_jaccard_distance(a, b);
    session.emit({{"kind", "weighted-jaccard"}, {"similarity", j}, {"distance", dist}},
                 fmt::format("J_w = {} ({:.4f})\ndistance = {} ({:.4f})\n", j.str(), j.to_double(), dist.str(),
                             dist.to_double()));
  });

  auto* werror = metrics->add_subcommand("weighted-error", "weighted error count");
  werror->add_option("--counts", counts, "name=count,...")->required();
  werror->add_option("--weights", weights, "name=weight,... (weights may be 1/2 or 0.5)")->required();
  werror->callback([&session] {
    ErrorProfile p;
    p.model = "cli";
    p.counts = parse_counts(counts);
    for (const auto& kv : split(weights, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kParse, "expected name=weight, got " + kv);
      p.weights[kv.substr(0, eq)] = Rational::parse(kv.substr(eq + 1));
    }
    const auto c = weighted_error(p);
    session.emit({{"kind", "weighted-error"}, {"value", c}}, fmt::format("C(M) = {}\n", c.str()));
  });

  auto* select = metrics->add_subcommand("select-judge", "pick the judge with the best claim score");
  select->add_option("--judge", judges, "candidate judge (repeatable)")->required();
  select->add_option("--dataset", dataset_id, "dataset record id")->required();
  select->callback([&session] {
    const auto d = session.dataset(dataset_id);
    std::map<std::string, VerdictFn> fns;
    for (const auto& name : judges) fns.emplace(name, verdict_with(session.judge(name), session.repo()));
    const auto sel = select_best_judge(fns, d.pairs);
    session.emit(selection_json(sel), selection_table(sel));
  });
}

void add_bootstrap(CLI::App& app, Session& session, int& exit_code) {
  auto* cmd = app.add_subcommand("bootstrap", "rank a new model's outputs and open a human review batch");
  static std::string prev, next, path, judge, human, threshold = "9/10", labels_batch;
  static std::size_t n = 24;
  static std::uint64_t seed = 0;
  cmd->add_option("--prev", prev, "corpus id of the human-ranked generation");
  cmd->add_option("--new", next, "corpus id of the new generation");
  cmd->add_option("--path", path, "path key whose final artifacts are ranked");
  cmd->add_option("--judge", judge, "score-single judge");
  cmd->add_option("--human-ranks", human, "human ranks of the previous artifacts (JSON id -> rank)");
  cmd->add_option("-n", n, "pairs to sample for review");
  cmd->add_option("--rng-seed", seed, "sampling seed");
  cmd->add_option("--threshold", threshold, "acceptance threshold");
  cmd->add_option("--evaluate", labels_batch, "report agreement for an existing review batch instead");
  cmd->callback([&session, &exit_code] {
    LabelBook book(session.store());
    if (!labels_batch.empty()) {
      const auto a = book.agreement(labels_batch);
      if (a.status() == "reject") exit_code = kExitNegative;
      session.emit(to_json(a), fmt::format("batch {}: {}/{} agreeing ({} labeled of {}), threshold {} -> {}\n",
                                           a.batch_id, a.agreeing, a.compared, a.labeled, a.total,
                                           a.threshold.str(), a.status()));
      return;
    }
    if (prev.empty() || next.empty() || path.empty() || judge.empty() || human.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--prev, --new, --path, --judge and --human-ranks are required");
    }
    const auto pc = session.corpus(prev);
    const auto nc = session.corpus(next);
    std::map<std::string, const Artifact*> prev_by_idea;
    for (const auto& e : pc.entries) {
      auto it = e.runs.find(path);
      if (it != e.runs.end() && it->second.complete()) prev_by_idea[e.idea.id] = &it->second.last();
    }
    std::vector<Artifact> news, prevs;
    for (const auto& e : nc.entries) {
      auto it = e.runs.find(path);
      auto p = prev_by_idea.find(e.idea.id);
      if (it == e.runs.end() || !it->second.complete() || p == prev_by_idea.end()) continue;
      news.push_back(it->second.last());
      prevs.push_back(*p->second);
    }
    SamplePlan plan;
    plan.n = n;
    plan.rng_seed = seed;
    const auto batch = bootstrap_ranking(news, prevs, RankAssignment{"human", read_scores(human)},
                                         context_rank_with(session.judge(judge)), plan, Rational::parse(threshold));
    session.store().put(RecordType::kPlan, to_json(batch));
    const auto review = book.create_bootstrap_batch(batch);
    auto out = to_json(batch);
    out["review_batch"] = review.id;
    session.emit(out, fmt::format("ranked {} artifacts ({} failed); review batch {} with {} pairs\n",
                                  batch.judge_ranks.size(), batch.failed.size(), review.id, review.task_ids.size()));
  });
}

void add_regress(CLI::App& app, Session& session, int& exit_code) {
  auto* cmd = app.add_subcommand("regress", "evaluate claims and compare with a baseline run");
  static std::string claims_file, corpus_id, baseline, tolerance = "2/100";
  cmd->add_option("--claims", claims_file, "claims (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--corpus", corpus_id, "corpus record id")->required();
  cmd->add_option("--baseline", baseline, "run id of the baseline regression");
  cmd->add_option("--tolerance", tolerance, "allowed accuracy drop");
  cmd->callback([&session, &exit_code] {
    const auto j = read_json(claims_file);
    std::vector<ClaimSpec> claims;
    for (const auto& c : j.is_array() ? j : j.at("claims")) claims.push_back(claim_spec_from_json(c));
    const auto corpus = session.corpus(corpus_id);
    ClaimContext ctx;
    ctx.corpus = &corpus;
    ctx.pipeline = &session.pipeline();
    for (const auto& c : claims) ctx.judges[c.judge] = &session.judge(c.judge);
    std::optional<RegressionRecord> base;
    if (!baseline.empty()) {
      for (const auto& rec : session.store().records(RecordType::kReport)) {
        const auto r = rec.json();
        if (r.value("kind", std::string()) == "regression" && r.value("run_id", std::string()) == baseline) {
          base = regression_from_json(r);
        }
      }
      if (!base) throw Error(ErrorCode::kNotFound, "no regression run " + baseline);
    }
    const auto record = run_regression(claims, ctx, base, Rational::parse(tolerance));
    if (record.degraded()) exit_code = kExitNegative;
    session.emit(to_json(record), format_table(record));
  });
}

void add_labels(CLI::App& app, Session& session) {
  auto* labels = app.add_subcommand("labels", "human labeling batches")->require_subcommand(1);
  static std::string population, kind = "rank-single", scale = "summarization", judge_ranks, threshold = "9/10",
                     task, label, labeler = "cli", batch;
  static std::size_t n = 24;
  static std::uint64_t seed = 0;

  auto* create = labels->add_subcommand("create", "sample a labeling batch");
  create->add_option("--population", population, "artifact ids (JSON array or one per line)")->required();
  create->add_option("--kind", kind, "rank-single | prefer-pair");
  create->add_option("--scale", scale, "scale for rank-single tasks");
  create->add_option("-n", n, "tasks to sample");
  create->add_option("--rng-seed", seed, "sampling seed");
  create->add_option("--judge-ranks", judge_ranks, "judge ranks for live agreement (JSON id -> rank)");
  create->add_option("--threshold", threshold, "acceptance threshold");
  create->callback([&session] {
    LabelBook book(session.store());
    SamplePlan plan;
    plan.n = n;
    plan.rng_seed = seed;
    std::map<std::string, int> ranks;
    if (!judge_ranks.empty()) ranks = read_scores(judge_ranks);
    const auto b = book.create_batch(read_ids(population), plan, parse_label_kind(kind), scale, ranks,
                                     Rational::parse(threshold));
    std::string table = fmt::format("batch {} with {} tasks\n", b.id, b.task_ids.size());
    for (const auto& id : b.task_ids) table += id + "\n";
    session.emit(to_json(b), table);
  });

  auto* submit = labels->add_subcommand("submit", "record a label for a task");
  submit->add_option("--task", task, "task id")->required();
  submit->add_option("--label", label, "rank on the scale, or first/second")->required();
  submit->add_option("--labeler", labeler, "labeler id");
  submit->callback([&session] {
    LabelBook book(session.store());
    const auto t = book.submit(task, label_value_from_json(nlohmann::json(label)), labeler);
    session.emit(to_json(t), fmt::format("task {} done\n", t.id));
  });

  auto* exp = labels->add_subcommand("export", "export a batch with its labels");
  exp->add_option("--batch", batch, "batch id")->required();
  exp->callback([&session] {
    LabelBook book(session.store());
    session.emit(book.export_batch(batch), book.export_table(batch));
  });
}

void add_serve(CLI::App& app, Session& session) {
  auto* cmd = app.add_subcommand("serve", "serve the review API (and optionally the console)");
  static int port = 8080;
  static std::string host = "127.0.0.1", static_dir;
  cmd->add_option("--port", port, "port (0 picks one)");
  cmd->add_option("--host", host, "bind address");
  cmd->add_option("--static", static_dir, "directory with the console build")->check(CLI::ExistingDirectory);
  cmd->callback([&session] {
    std::optional<std::filesystem::path> dir;
    if (!static_dir.empty()) dir = static_dir;
    ReviewServer server(session.store(), dir);
    const int bound = server.bind(host, port);
    std::cerr << fmt::format("serving on http://{}:{}\n", host, bound);
    server.listen();
  });
}

}  // namespace

void register_commands(CLI::App& app, GlobalOptions& options, int& exit_code) {
  static std::unique_ptr<Session> session;
  session = std::make_unique<Session>(options);
  add_graph(app, *session, exit_code);
  add_corpus(app, *session);
  add_perturb(app, *session);
  add_compose(app, *session);
  add_edit(app, *session);
  add_judge(app, *session);
  add_metrics(app, *session);
  add_bootstrap(app, *session, exit_code);
  add_regress(app, *session, exit_code);
  add_labels(app, *session);
  add_serve(app, *session);
}

}  // namespace forge::cli
