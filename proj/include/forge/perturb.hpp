#pragma once

// Meaning-preserving textual variants of source code. No model is involved:
// every transform is a deterministic function of (body, kind, rng seed).

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/artifact.hpp"
#include "forge/graph.hpp"

namespace forge {

enum class PerturbationKind { kRenameIdentifiers, kReorderStatements, kCommentNoise };

std::string_view to_string(PerturbationKind k);
PerturbationKind parse_perturbation_kind(std::string_view text);

// Comment and identifier conventions, chosen by artifact kind name.
enum class Syntax { kCLike, kPython, kCobol };
Syntax syntax_for_kind(std::string_view kind_name);
std::string line_comment(Syntax syntax);  // "//", "#", "*>"

struct Token {
  enum class Type { kIdentifier, kNumber, kString, kComment, kPunct, kSpace };
  Type type;
  std::string text;
  std::size_t offset = 0;
};

// Lossless: concatenating token texts reproduces the input.
std::vector<Token> tokenize(std::string_view body, Syntax syntax);

// Identifiers a rename may touch: not keywords or well-known library
// names, not member accesses, not called as functions.
std::vector<std::string> renamable_identifiers(std::string_view body, Syntax syntax);

struct PerturbationSet {
  std::string source_artifact_id;
  PerturbationKind kind = PerturbationKind::kCommentNoise;
  std::vector<Artifact> members;
  // One old-name -> new-name map per member (rename-identifiers only).
  std::vector<std::map<std::string, std::string>> renames;

  std::vector<std::string> member_ids() const;
};

// n distinct variants, each different from the source. Throws kPrecondition
// for non-code artifacts or n == 0 and kInapplicable when the transform has
// nothing to act on (or cannot yield n distinct variants).
PerturbationSet perturb(const Artifact& source, PerturbationKind kind, std::size_t n,
                        std::uint64_t rng_seed,
                        ArtifactCategory category = ArtifactCategory::kSourceCode);

nlohmann::json to_json(const PerturbationSet& set);

}  // namespace forge
