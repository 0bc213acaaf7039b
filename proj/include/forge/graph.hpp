#pragma once

// Generation multigraph: artifact kinds as nodes, labeled generation edges.
//
// Paths are edge-simple (an edge is never reused) but may revisit nodes, so
// loops such as (cobol, java, python, cobol) are representable. Enumeration
// order is lexicographic over the sequence of edge ids.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

enum class ArtifactCategory { kNaturalLanguage, kSourceCode, kSummary };
enum class EdgeLabel { kStrong, kTested };

std::string_view to_string(ArtifactCategory c);
std::string_view to_string(EdgeLabel l);
ArtifactCategory parse_category(std::string_view text);
EdgeLabel parse_label(std::string_view text);

struct KindId {
  std::uint32_t value = 0;
  friend auto operator<=>(const KindId&, const KindId&) = default;
};

struct EdgeId {
  std::uint32_t value = 0;
  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

struct ArtifactKind {
  KindId id;
  std::string name;
  ArtifactCategory category = ArtifactCategory::kNaturalLanguage;

  friend bool operator==(const ArtifactKind&, const ArtifactKind&) = default;
};

struct GenEdge {
  EdgeId id;
  KindId from;
  KindId to;
  EdgeLabel label = EdgeLabel::kStrong;
  std::string provider_binding;

  friend bool operator==(const GenEdge&, const GenEdge&) = default;
};

struct GenPath {
  std::vector<EdgeId> edges;
  std::vector<KindId> kinds;  // edges.size() + 1 entries

  bool empty() const { return edges.empty(); }
  friend bool operator==(const GenPath&, const GenPath&) = default;
};

struct GenLoop {
  GenPath path;
  friend bool operator==(const GenLoop&, const GenLoop&) = default;
};

enum class PlanPurpose {
  kGeneration,  // golden data: every hop must be Strong
  kTest,        // regression: at least one hop must be Tested
};

struct PlanReport {
  bool valid = false;
  PlanPurpose purpose = PlanPurpose::kGeneration;
  std::vector<std::size_t> tested_edge_indices;
  // Leading Strong hops whose outputs can be served from the generation cache.
  std::size_t reusable_prefix_edges = 0;
  std::string diagnostic;
};

class GenerationGraph {
 public:
  KindId add_kind(std::string name, ArtifactCategory category);
  EdgeId add_edge(KindId from, KindId to, EdgeLabel label, std::string provider_binding);

  std::optional<KindId> find_kind(std::string_view name) const;
  KindId kind_id(std::string_view name) const;  // throws kNotFound
  const ArtifactKind& kind(KindId id) const;
  const GenEdge& edge(EdgeId id) const;
  const std::vector<ArtifactKind>& kinds() const { return kinds_; }
  const std::vector<GenEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return kinds_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::vector<GenPath> enumerate_paths(KindId from, KindId to, std::size_t max_len,
                                       std::optional<EdgeLabel> label_filter = {}) const;

  // Closed edge-simple walks that start and end at the anchor and do not pass
  // through it in between.
  std::vector<GenLoop> enumerate_loops(KindId anchor, std::size_t max_len,
                                       std::optional<EdgeLabel> label_filter = {}) const;

  // Builds a path from an explicit edge list, checking the chain.
  GenPath make_path(const std::vector<EdgeId>& edges) const;

  // Resolves a kind-name sequence to a path, choosing at each hop the
  // lowest-id edge with the requested label.
  GenPath path_by_names(const std::vector<std::string>& names,
                        EdgeLabel label = EdgeLabel::kStrong) const;
  // Same, with one label per hop.
  GenPath path_by_names(const std::vector<std::string>& names,
                        const std::vector<EdgeLabel>& labels) const;

  PlanReport validate_plan(const GenPath& path, PlanPurpose purpose) const;

  // "description>cobol>summary"
  std::string describe(const GenPath& path) const;

  friend bool operator==(const GenerationGraph&, const GenerationGraph&) = default;

 private:
  void check_kind(KindId id) const;

  std::vector<ArtifactKind> kinds_;
  std::vector<GenEdge> edges_;
};

// Line format: "kind<TAB>name<TAB>category" and
// "edge<TAB>from<TAB>to<TAB>label<TAB>provider". '#' starts a comment line.
GenerationGraph parse_graph_tsv(std::string_view text);
std::string to_graph_tsv(const GenerationGraph& graph);

// Structured form: {"kinds":[{"name","category"}],"edges":[{"from","to","label","provider"}]}
GenerationGraph parse_graph_json(std::string_view text);
std::string to_graph_json(const GenerationGraph& graph);

// Chooses the format by sniffing the first non-space character.
GenerationGraph parse_graph(std::string_view text);

}  // namespace forge
