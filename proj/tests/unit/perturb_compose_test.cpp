#include <gtest/gtest.h>

#include <algorithm>

#include "forge/compose.hpp"
#include "forge/error.hpp"
#include "forge/perturb.hpp"

using namespace forge;

namespace {

const char* kJava =
    "public class Main {\n"
    "    public static void main(String[] args) {\n"
    "        int total = 0;\n"
    "        int count = 3;\n"
    "        String label = \"sum\";\n"
    "        // keep total in sync\n"
    "        total = total + count;\n"
    "        System.out.println(label + total);\n"
    "    }\n"
    "}\n";

const char* kPython =
    "def main():\n"
    "    total = 0\n"
    "    step = 2\n"
    "    total = total + step\n"
    "    print(total)\n";

const char* kCobol =
    "       IDENTIFICATION DIVISION.\n"
    "       PROGRAM-ID. SUMMER.\n"
    "       DATA DIVISION.\n"
    "       WORKING-STORAGE SECTION.\n"
    "       01 WS-TOTAL PIC 9(5) VALUE 0.\n"
    "       PROCEDURE DIVISION.\n"
    "           ADD 1 TO WS-TOTAL.\n"
    "           DISPLAY WS-TOTAL.\n"
    "           STOP RUN.\n";

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto nl = s.find('\n', pos);
    out.push_back(s.substr(pos, nl - pos));
    pos = nl == std::string::npos ? s.size() : nl + 1;
  }
  return out;
}

// Applies a rename map token by token: only identifier tokens change.
std::string rename_oracle(const std::string& body, Syntax syntax, const std::map<std::string, std::string>& m) {
  std::string out;
  for (const auto& t : tokenize(body, syntax)) {
    auto it = t.type == Token::Type::kIdentifier ? m.find(t.text) : m.end();
    out += it == m.end() ? t.text : it->second;
  }
  return out;
}

}  // namespace

TEST(Tokenize, IsLossless) {
  for (auto [body, syntax] : {std::pair{kJava, Syntax::kCLike}, std::pair{kPython, Syntax::kPython},
                              std::pair{kCobol, Syntax::kCobol}}) {
    std::string joined;
    for (const auto& t : tokenize(body, syntax)) joined += t.text;
    EXPECT_EQ(joined, body);
  }
}

TEST(Tokenize, StringsAndCommentsAreOpaque) {
  const auto toks = tokenize(kJava, Syntax::kCLike);
  bool saw_string = false;
  bool saw_comment = false;
  for (const auto& t : toks) {
    saw_string |= t.type == Token::Type::kString && t.text == "\"sum\"";
    saw_comment |= t.type == Token::Type::kComment && t.text.find("keep total") != std::string::npos;
  }
  EXPECT_TRUE(saw_string);
  EXPECT_TRUE(saw_comment);
}

TEST(Renamable, SkipsKeywordsCallsAndMembers) {
  const auto ids = renamable_identifiers(kJava, Syntax::kCLike);
  for (const char* expected : {"total", "count", "label"}) {
    EXPECT_NE(std::find(ids.begin(), ids.end(), expected), ids.end()) << expected;
  }
  for (const char* banned : {"public", "int", "main", "System", "out", "println", "String"}) {
    EXPECT_EQ(std::find(ids.begin(), ids.end(), banned), ids.end()) << banned;
  }
  EXPECT_EQ(syntax_for_kind("cobol"), Syntax::kCobol);
  EXPECT_EQ(syntax_for_kind("python"), Syntax::kPython);
  EXPECT_EQ(syntax_for_kind("java"), Syntax::kCLike);
  EXPECT_EQ(line_comment(Syntax::kPython), "#");
}

TEST(Perturb, RenameMatchesTokenOracle) {
  const auto src = make_artifact("java", kJava, {});
  const auto set = perturb(src, PerturbationKind::kRenameIdentifiers, 3, 11);
  ASSERT_EQ(set.members.size(), 3u);
  ASSERT_EQ(set.renames.size(), 3u);
  std::set<std::string> bodies{src.body};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(set.members[i].body, rename_oracle(kJava, Syntax::kCLike, set.renames[i]));
    EXPECT_TRUE(bodies.insert(set.members[i].body).second);
    EXPECT_EQ(set.members[i].lineage.parent, src.id);
    EXPECT_EQ(set.members[i].lineage.derivation, "perturbation:rename-identifiers");
    // The string literal and the comment survive untouched.
    EXPECT_NE(set.members[i].body.find("\"sum\""), std::string::npos);
    EXPECT_NE(set.members[i].body.find("// keep total in sync"), std::string::npos);
  }
}

TEST(Perturb, DeterministicInSeed) {
  const auto src = make_artifact("python", kPython, {});
  const auto a = perturb(src, PerturbationKind::kCommentNoise, 3, 5);
  const auto b = perturb(src, PerturbationKind::kCommentNoise, 3, 5);
  EXPECT_EQ(a.member_ids(), b.member_ids());
  const auto c = perturb(src, PerturbationKind::kCommentNoise, 3, 6);
  EXPECT_NE(a.member_ids(), c.member_ids());
}

TEST(Perturb, CommentNoiseOnlyAddsCommentLines) {
  for (auto [kind, body] : {std::pair{"java", kJava}, std::pair{"python", kPython}, std::pair{"cobol", kCobol}}) {
    const auto src = make_artifact(kind, body, {});
    const auto set = perturb(src, PerturbationKind::kCommentNoise, 3, 1);
    const auto syntax = syntax_for_kind(kind);
    const auto marker = syntax == Syntax::kCobol ? std::string("*>") : line_comment(syntax);
    for (const auto& m : set.members) {
      std::vector<std::string> kept;
      for (const auto& l : lines(m.body)) {
        const auto first = l.find_first_not_of(' ');
        const bool added_comment = first != std::string::npos && l.compare(first, marker.size(), marker) == 0 &&
                                   body != std::string_view() && std::string(body).find(l) == std::string::npos;
        if (!added_comment) kept.push_back(l);
      }
      EXPECT_EQ(kept, lines(body)) << kind;
    }
  }
}

TEST(Perturb, ReorderPermutesIndependentDeclarations) {
  const auto src = make_artifact("java", kJava, {});
  const auto set = perturb(src, PerturbationKind::kReorderStatements, 3, 2);
  const auto src_lines = lines(kJava);
  auto sorted_src = src_lines;
  std::sort(sorted_src.begin(), sorted_src.end());
  for (const auto& m : set.members) {
    auto l = lines(m.body);
    EXPECT_EQ(l.size(), sorted_src.size());
    // Everything from the first dependent statement on stays in place.
    EXPECT_EQ(std::vector<std::string>(l.begin() + 5, l.end()),
              std::vector<std::string>(src_lines.begin() + 5, src_lines.end()));
    std::sort(l.begin(), l.end());
    EXPECT_EQ(l, sorted_src);
  }
  // Three declarations allow only five distinct reorderings.
  try {
    perturb(src, PerturbationKind::kReorderStatements, 6, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInapplicable);
  }
}

TEST(Perturb, Preconditions) {
  const auto summary = make_artifact("summary", "The program adds numbers.", {});
  try {
    perturb(summary, PerturbationKind::kCommentNoise, 1, 0, ArtifactCategory::kSummary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
  EXPECT_THROW(perturb(make_artifact("java", kJava, {}), PerturbationKind::kCommentNoise, 0, 0), Error);
  try {
    perturb(make_artifact("python", "print(1)\n", {}), PerturbationKind::kRenameIdentifiers, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInapplicable);
  }
  EXPECT_EQ(parse_perturbation_kind("comment-noise"), PerturbationKind::kCommentNoise);
  EXPECT_THROW(parse_perturbation_kind("shuffle"), Error);
}

TEST(Compose, UnitsAreEmbeddedVerbatim) {
  Lineage la;
  la.idea_id = "seed-1/alpha";
  Lineage lb;
  lb.idea_id = "seed-1/beta";
  const auto a = make_artifact("python", kPython, la);
  const auto b = make_artifact("python", "def other():\n    return 1\n", lb);
  const auto [composed, record] = compose_large({a, b}, {1, 0});
  EXPECT_EQ(composed.kind, "python");
  EXPECT_EQ(composed.lineage.derivation, "composition");
  EXPECT_EQ(record.composed_artifact_id, composed.id);
  EXPECT_EQ(record.extract(composed.body, 0), a.body);
  EXPECT_EQ(record.extract(composed.body, 1), b.body);
  EXPECT_EQ(record.call_order, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(unit_name(a), "alpha");
  // The dispatch table lists beta first.
  const auto table = composed.body.substr(composed.body.find("dispatch table"));
  EXPECT_LT(table.find("beta"), table.find("alpha"));
  const auto back = composition_from_json(to_json(record));
  EXPECT_EQ(back.extract(composed.body, 1), b.body);
}

TEST(Compose, Preconditions) {
  const auto a = make_artifact("python", kPython, {});
  const auto j = make_artifact("java", kJava, {});
  try {
    compose_large({a});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
  try {
    compose_large({a, j});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_THROW(compose_large({a, make_artifact("python", "x = 1\n", {})}, {0, 0}), Error);
  // Same idea twice still yields distinct call names.
  const auto [c, r] = compose_large({a, make_artifact("python", "x = 1\n", {})});
  EXPECT_NE(r.ranges[0].unit_name, r.ranges[1].unit_name);
}
