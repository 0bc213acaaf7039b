#include "forge/graph.hpp"

#include <algorithm>

#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ArtifactCategory c) {
  switch (c) {
    case ArtifactCategory::kNaturalLanguage: return "natural-language";
    case ArtifactCategory::kSourceCode: return "source-code";
    case ArtifactCategory::kSummary: return "summary";
  }
  return "natural-language";
}

std::string_view to_string(EdgeLabel l) {
  return l == EdgeLabel::kStrong ? "Strong" : "Tested";
}

ArtifactCategory parse_category(std::string_view text) {
  if (text == "natural-language") return ArtifactCategory::kNaturalLanguage;
  if (text == "source-code") return ArtifactCategory::kSourceCode;
  if (text == "summary") return ArtifactCategory::kSummary;
  throw Error(ErrorCode::kParse, "unknown artifact category '" + std::string(text) + "'");
}

EdgeLabel parse_label(std::string_view text) {
  if (text == "Strong") return EdgeLabel::kStrong;
  if (text == "Tested") return EdgeLabel::kTested;
  throw Error(ErrorCode::kParse, "unknown edge label '" + std::string(text) + "'");
}

KindId GenerationGraph::add_kind(std::string name, ArtifactCategory category) {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "kind name must be non-empty");
  if (auto existing = find_kind(name)) {
    throw Error(ErrorCode::kDuplicate, "kind '" + name + "' already exists with id " +
                                           std::to_string(existing->value));
  }
  KindId id{static_cast<std::uint32_t>(kinds_.size())};
  kinds_.push_back(ArtifactKind{id, std::move(name), category});
  return id;
}

EdgeId GenerationGraph::add_edge(KindId from, KindId to, EdgeLabel label,
                                 std::string provider_binding) {
  check_kind(from);
  check_kind(to);
  EdgeId id{static_cast<std::uint32_t>(edges_.size())};
  edges_.push_back(GenEdge{id, from, to, label, std::move(provider_binding)});
  return id;
}

std::optional<KindId> GenerationGraph::find_kind(std::string_view name) const {
  for (const auto& k : kinds_) {
    if (k.name == name) return k.id;
  }
  return std::nullopt;
}

KindId GenerationGraph::kind_id(std::string_view name) const {
  if (auto id = find_kind(name)) return *id;
  throw Error(ErrorCode::kNotFound, "unknown kind '" + std::string(name) + "'");
}

const ArtifactKind& GenerationGraph::kind(KindId id) const {
  check_kind(id);
  return kinds_[id.value];
}

const GenEdge& GenerationGraph::edge(EdgeId id) const {
  if (id.value >= edges_.size()) {
    throw Error(ErrorCode::kNotFound, "unknown edge id " + std::to_string(id.value));
  }
  return edges_[id.value];
}

void GenerationGraph::check_kind(KindId id) const {
  if (id.value >= kinds_.size()) {
    throw Error(ErrorCode::kNotFound, "unknown kind id " + std::to_string(id.value));
  }
}

namespace {

struct Walker {
  const std::vector<GenEdge>& edges;
  std::optional<EdgeLabel> filter;
  std::size_t max_len;
  KindId target;
  bool stop_at_target;  // loops may not pass through their anchor
  std::vector<bool> used;
  std::vector<EdgeId> stack;
  std::vector<GenPath> out;

  void emit(KindId start) {
    GenPath p;
    p.edges = stack;
    p.kinds.push_back(start);
    for (auto e : stack) p.kinds.push_back(edges[e.value].to);
    out.push_back(std::move(p));
  }

  void walk(KindId start, KindId at) {
    if (stack.size() == max_len) return;
    // edges_ is indexed by id, so scanning in order visits ascending ids.
    for (const auto& e : edges) {
      if (e.from != at || used[e.id.value]) continue;
      if (filter && e.label != *filter) continue;
      used[e.id.value] = true;
      stack.push_back(e.id);
      const bool at_target = e.to == target;
      if (at_target) emit(start);
      if (!(at_target && stop_at_target)) walk(start, e.to);
      stack.pop_back();
      used[e.id.value] = false;
    }
  }
};

}  // namespace

std::vector<GenPath> GenerationGraph::enumerate_paths(KindId from, KindId to,
                                                      std::size_t max_len,
                                                      std::optional<EdgeLabel> label_filter) const {
  check_kind(from);
  check_kind(to);
  if (max_len < 1) throw Error(ErrorCode::kInvalidArgument, "max_len must be >= 1");
  Walker w{edges_, label_filter, max_len, to, false, std::vector<bool>(edges_.size()), {}, {}};
  w.walk(from, from);
  std::sort(w.out.begin(), w.out.end(),
            [](const GenPath& a, const GenPath& b) { return a.edges < b.edges; });
  return std::move(w.out);
}

std::vector<GenLoop> GenerationGraph::enumerate_loops(KindId anchor, std::size_t max_len,
                                                      std::optional<EdgeLabel> label_filter) const {
  check_kind(anchor);
  if (max_len < 1) throw Error(ErrorCode::kInvalidArgument, "max_len must be >= 1");
  Walker w{edges_, label_filter, max_len, anchor, true, std::vector<bool>(edges_.size()), {}, {}};
  w.walk(anchor, anchor);
  std::sort(w.out.begin(), w.out.end(),
            [](const GenPath& a, const GenPath& b) { return a.edges < b.edges; });
  std::vector<GenLoop> loops;
  loops.reserve(w.out.size());
  for (auto& p : w.out) loops.push_back(GenLoop{std::move(p)});
  return loops;
}

GenPath GenerationGraph::make_path(const std::vector<EdgeId>& edge_ids) const {
  GenPath p;
  for (std::size_t i = 0; i < edge_ids.size(); ++i) {
    const auto& e = edge(edge_ids[i]);
    if (i == 0) {
      p.kinds.push_back(e.from);
    } else if (p.kinds.back() != e.from) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge " + std::to_string(e.id.value) + " does not chain from the previous hop");
    }
    p.edges.push_back(e.id);
    p.kinds.push_back(e.to);
  }
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    for (std::size_t j = i + 1; j < p.edges.size(); ++j) {
      if (p.edges[i] == p.edges[j]) {
        throw Error(ErrorCode::kInvalidArgument, "path reuses an edge");
      }
    }
  }
  return p;
}

GenPath GenerationGraph::path_by_names(const std::vector<std::string>& names,
                                       EdgeLabel label) const {
  std::vector<EdgeLabel> labels(names.empty() ? 0 : names.size() - 1, label);
  return path_by_names(names, labels);
}

GenPath GenerationGraph::path_by_names(const std::vector<std::string>& names,
                                       const std::vector<EdgeLabel>& labels) const {
  if (names.empty()) throw Error(ErrorCode::kInvalidArgument, "empty kind sequence");
  if (labels.size() + 1 != names.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need exactly one label per hop");
  }
  GenPath p;
  p.kinds.push_back(kind_id(names[0]));
  for (std::size_t i = 1; i < names.size(); ++i) {
    const KindId from = p.kinds.back();
    const KindId to = kind_id(names[i]);
    std::optional<EdgeId> chosen;
    for (const auto& e : edges_) {
      if (e.from != from || e.to != to || e.label != labels[i - 1]) continue;
      if (std::find(p.edges.begin(), p.edges.end(), e.id) != p.edges.end()) continue;
      chosen = e.id;
      break;
    }
    if (!chosen) {
      throw Error(ErrorCode::kNotFound, "no " + std::string(to_string(labels[i - 1])) +
                                            " edge " + names[i - 1] + " -> " + names[i]);
    }
    p.edges.push_back(*chosen);
    p.kinds.push_back(to);
  }
  return p;
}

PlanReport GenerationGraph::validate_plan(const GenPath& path, PlanPurpose purpose) const {
  // Re-derive from edge ids so a hand-built path cannot smuggle in bad kinds.
  const GenPath checked = make_path(path.edges);
  if (!path.kinds.empty() && checked.kinds != path.kinds && !path.edges.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "path kinds do not match its edges");
  }

  PlanReport report;
  report.purpose = purpose;
  bool prefix_open = true;
  for (std::size_t i = 0; i < path.edges.size(); ++i) {
    if (edge(path.edges[i]).label == EdgeLabel::kTested) {
      report.tested_edge_indices.push_back(i);
      prefix_open = false;
    } else if (prefix_open) {
      ++report.reusable_prefix_edges;
    }
  }

  if (purpose == PlanPurpose::kTest) {
    report.valid = !report.tested_edge_indices.empty();
    if (!report.valid) report.diagnostic = "test plan has no Tested edge; nothing is under test";
  } else {
    report.valid = report.tested_edge_indices.empty();
    if (!report.valid) report.diagnostic = "generation plan must use Strong edges only";
  }
  return report;
}

std::string GenerationGraph::describe(const GenPath& path) const {
  std::string out;
  for (std::size_t i = 0; i < path.kinds.size(); ++i) {
    if (i) out += '>';
    out += kind(path.kinds[i]).name;
  }
  return out;
}

}  // namespace forge
