#include "forge/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/sampling.hpp"

namespace forge {
namespace {

constexpr std::string_view kKindNames[] = {"rename-identifiers", "reorder-independent-statements",
                                           "comment-noise"};

// Keywords and library names across the supported languages. Anything here
// is never renamed.
const std::unordered_set<std::string>& stoplist() {
  static const std::unordered_set<std::string> words = {
      // C, C++, Java, JavaScript
      "auto", "bool", "break", "case", "catch", "char", "class", "const", "constexpr", "continue",
      "default", "delete", "do", "double", "else", "enum", "explicit", "extends", "extern", "false",
      "final", "finally", "float", "for", "friend", "function", "goto", "if", "implements",
      "import", "include", "inline", "instanceof", "int", "interface", "let", "long", "namespace",
      "new", "null", "nullptr", "operator", "override", "package", "private", "protected",
      "public", "register", "return", "short", "signed", "sizeof", "static", "struct", "super",
      "switch", "synchronized", "template", "this", "throw", "throws", "true", "try", "typedef",
      "typename", "union", "unsigned", "using", "var", "virtual", "void", "volatile", "while",
      "boolean", "byte", "string", "vector", "map", "set", "std", "size_t", "cout", "cin", "cerr",
      "endl", "printf", "scanf", "main", "length", "size", "args", "console", "undefined",
      "typeof", "yield", "await", "async", "of", "in", "out", "uint8_t", "int32_t", "int64_t",
      "uint32_t", "uint64_t", "pair", "first", "second", "iostream", "algorithm",
      // Python
      "and", "as", "assert", "def", "del", "elif", "except", "from", "global", "is", "lambda",
      "nonlocal", "not", "or", "pass", "raise", "with", "self", "cls", "print", "range", "len",
      "input", "str", "list", "dict", "tuple", "min", "max", "sum", "abs", "sorted", "reversed",
      "enumerate", "zip", "open", "isinstance", "end", "sep", "key", "reverse", "file", "flush",
      "math", "sys", "os", "re",
      // Shared literals
      "NULL", "True", "False", "None"};
  return words;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool cobol_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-'; }

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::size_t scan_quoted(std::string_view s, std::size_t i, char q, bool escapes) {
  std::size_t j = i + 1;
  while (j < s.size() && s[j] != q && s[j] != '\n') {
    if (escapes && s[j] == '\\' && j + 1 < s.size()) ++j;
    ++j;
  }
  return j < s.size() && s[j] == q ? j + 1 : j;
}

std::size_t line_end(std::string_view s, std::size_t i) {
  auto e = s.find('\n', i);
  return e == std::string_view::npos ? s.size() : e;
}

bool at_line_start(std::string_view s, std::size_t i) {
  while (i > 0 && (s[i - 1] == ' ' || s[i - 1] == '\t')) --i;
  return i == 0 || s[i - 1] == '\n';
}

std::vector<std::string> split_lines(std::string_view body) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto e = body.find('\n', pos);
    if (e == std::string_view::npos) {
      lines.emplace_back(body.substr(pos));
      break;
    }
    lines.emplace_back(body.substr(pos, e - pos));
    pos = e + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string indent_of(const std::string& line) {
  return line.substr(0, line.find_first_not_of(" \t") == std::string::npos
                            ? line.size()
                            : line.find_first_not_of(" \t"));
}

const Token* prev_significant(const std::vector<Token>& toks, std::size_t i) {
  while (i > 0) {
    --i;
    if (toks[i].type != Token::Type::kSpace && toks[i].type != Token::Type::kComment) return &toks[i];
  }
  return nullptr;
}

const Token* next_significant(const std::vector<Token>& toks, std::size_t i) {
  for (++i; i < toks.size(); ++i) {
    if (toks[i].type != Token::Type::kSpace && toks[i].type != Token::Type::kComment) return &toks[i];
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// rename-identifiers

const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> pool = {
      "alpha", "bravo", "charlie", "delta", "echo",    "foxtrot", "golf",    "hotel", "india",
      "juliet", "kilo", "lima",    "mike",  "november", "oscar",  "papa",    "quebec", "romeo",
      "sierra", "tango", "uniform", "victor", "whiskey", "xray",  "yankee",  "zulu"};
  return pool;
}

std::map<std::string, std::string> draw_renames(const std::vector<std::string>& candidates,
                                                const std::set<std::string>& taken, Syntax syntax,
                                                Rng& rng) {
  std::map<std::string, std::string> renames;
  std::set<std::string> used = taken;
  const auto& pool = name_pool();
  for (const auto& old : candidates) {
    std::string fresh;
    do {
      const auto& word = pool[rng.below(pool.size())];
      const auto suffix = 10 + rng.below(90);
      fresh = syntax == Syntax::kCobol ? fmt::format("WS-{}-{}", upper(word), suffix)
                                       : fmt::format("{}_{}", word, suffix);
    } while (used.count(syntax == Syntax::kCobol ? upper(fresh) : fresh));
    used.insert(syntax == Syntax::kCobol ? upper(fresh) : fresh);
    renames.emplace(old, fresh);
  }
  return renames;
}

std::string apply_renames(std::string_view body, Syntax syntax,
                          const std::map<std::string, std::string>& renames) {
  std::string out;
  for (const auto& t : tokenize(body, syntax)) {
    if (t.type == Token::Type::kIdentifier) {
      auto it = renames.find(syntax == Syntax::kCobol ? upper(t.text) : t.text);
      if (it != renames.end()) {
        out += it->second;
        continue;
      }
    }
    out += t.text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// reorder-independent-statements

struct Declaration {
  std::string name;
  std::string initializer;
};

std::optional<Declaration> parse_declaration(const std::string& line, Syntax syntax) {
  static const std::regex clike(
      R"(^\s*(?:final\s+|const\s+)?(?:int|long|double|float|char|bool|boolean|short|unsigned|auto|String|string|std::string|var|let|size_t)\s+([A-Za-z_]\w*)\s*(?:=\s*([^;]*))?;\s*$)");
  static const std::regex python(R"(^\s*([A-Za-z_]\w*)\s*=\s*([^=].*?)\s*$)");
  static const std::regex cobol(R"(^\s*(?:77|01)\s+([A-Za-z][A-Za-z0-9-]*)\s+PIC(.*)\.\s*$)",
                                std::regex::icase);
  static const std::regex literal(
      R"(^\s*(?:[-+]?\d[\d.]*[lLfF]?|"[^"]*"|'[^']*'|\[\]|\{\}|True|False|None|true|false)\s*$)");
  std::smatch m;
  switch (syntax) {
    case Syntax::kCLike:
      if (!std::regex_match(line, m, clike)) return std::nullopt;
      if (m[2].matched && m[2].str().find('(') != std::string::npos) return std::nullopt;
      return Declaration{m[1].str(), m[2].matched ? m[2].str() : ""};
    case Syntax::kPython:
      if (!std::regex_match(line, m, python)) return std::nullopt;
      if (!std::regex_match(m[2].str(), literal)) return std::nullopt;
      return Declaration{m[1].str(), m[2].str()};
    case Syntax::kCobol:
      if (!std::regex_match(line, m, cobol)) return std::nullopt;
      if (upper(m[1].str()) == "FILLER") return std::nullopt;
      return Declaration{upper(m[1].str()), m[2].str()};
  }
  return std::nullopt;
}

bool mentions(const std::string& text, const std::string& name, Syntax syntax) {
  for (auto pos = text.find(name); pos != std::string::npos; pos = text.find(name, pos + 1)) {
    auto word = syntax == Syntax::kCobol ? cobol_char : ident_char;
    const bool left = pos == 0 || !word(text[pos - 1]);
    const bool right = pos + name.size() >= text.size() || !word(text[pos + name.size()]);
    if (left && right) return true;
  }
  return false;
}

// Runs of adjacent, mutually independent declaration lines (length >= 2),
// as [first, last) line index ranges.
std::vector<std::pair<std::size_t, std::size_t>> declaration_runs(
    const std::vector<std::string>& lines, const std::vector<bool>& safe, Syntax syntax) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t start = 0;
  std::vector<Declaration> current;
  auto close = [&](std::size_t end) {
    if (current.size() >= 2) runs.emplace_back(start, end);
    current.clear();
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto decl = safe[i] ? parse_declaration(lines[i], syntax) : std::nullopt;
    if (!decl) {
      close(i);
      continue;
    }
    bool dependent = !current.empty() && indent_of(lines[i]) != indent_of(lines[start]);
    for (const auto& d : current) {
      if (d.name == decl->name || mentions(decl->initializer, d.name, syntax)) dependent = true;
    }
    if (dependent) close(i);
    if (current.empty()) start = i;
    current.push_back(*decl);
  }
  close(lines.size());
  return runs;
}

// Lines that start outside any string or block comment.
std::vector<bool> safe_line_starts(std::string_view body, Syntax syntax) {
  std::set<std::size_t> boundaries;
  for (const auto& t : tokenize(body, syntax)) {
    if (t.type == Token::Type::kSpace) {
      for (std::size_t k = 0; k <= t.text.size(); ++k) boundaries.insert(t.offset + k);
    } else {
      boundaries.insert(t.offset);
    }
  }
  boundaries.insert(body.size());
  std::vector<bool> safe;
  std::size_t pos = 0;
  bool prev_continues = false;
  while (true) {
    safe.push_back(boundaries.count(pos) > 0 && !prev_continues);
    auto e = body.find('\n', pos);
    if (e == std::string_view::npos) break;
    prev_continues = e > 0 && body[e - 1] == '\\';
    pos = e + 1;
  }
  return safe;
}

std::uint64_t factorial_saturating(std::size_t k) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) {
    if (f > (1ULL << 40)) return 1ULL << 40;
    f *= i;
  }
  return f;
}

// ---------------------------------------------------------------------------
// comment-noise

const std::vector<std::string>& phrases() {
  static const std::vector<std::string> p = {
      "note: value checked below",  "processing step",       "see surrounding logic",
      "keep in sync with caller",    "intermediate result",   "main computation",
      "input handling",              "output formatting",     "loop over items",
      "helper section",              "reviewed",              "boundary case handled here"};
  return p;
}

std::string comment_line(Syntax syntax, const std::string& indent, const std::string& text) {
  if (syntax == Syntax::kCobol) {
    const std::string pad = indent.size() >= 7 ? indent : std::string(7, ' ');
    return pad + "*> " + text;
  }
  return indent + line_comment(syntax) + " " + text;
}

}  // namespace

std::string_view to_string(PerturbationKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

PerturbationKind parse_perturbation_kind(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == text) return static_cast<PerturbationKind>(i);
  }
  if (text == "rename") return PerturbationKind::kRenameIdentifiers;
  if (text == "reorder") return PerturbationKind::kReorderStatements;
  if (text == "comment") return PerturbationKind::kCommentNoise;
  throw Error(ErrorCode::kInvalidArgument, "unknown perturbation kind '" + std::string(text) + "'");
}

Syntax syntax_for_kind(std::string_view kind_name) {
  std::string k(kind_name);
  for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "python" || k == "py") return Syntax::kPython;
  if (k == "cobol" || k == "cbl") return Syntax::kCobol;
  return Syntax::kCLike;
}

std::string line_comment(Syntax syntax) {
  switch (syntax) {
    case Syntax::kPython: return "#";
    case Syntax::kCobol: return "*>";
    case Syntax::kCLike: break;
  }
  return "//";
}

std::vector<Token> tokenize(std::string_view s, Syntax syntax) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto emit = [&](Token::Type type, std::size_t end) {
    out.push_back(Token{type, std::string(s.substr(i, end - i)), i});
    i = end;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      emit(Token::Type::kSpace, j);
      continue;
    }
    // Comments
    if (syntax == Syntax::kCLike) {
      if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
        emit(Token::Type::kComment, line_end(s, i));
        continue;
      }
      if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
        auto e = s.find("*/", i + 2);
        emit(Token::Type::kComment, e == std::string_view::npos ? s.size() : e + 2);
        continue;
      }
      if (c == '#' && at_line_start(s, i)) {  // preprocessor line, opaque
        std::size_t j = line_end(s, i);
        while (j < s.size() && j > 0 && s[j - 1] == '\\') j = line_end(s, j + 1);
        emit(Token::Type::kComment, j);
        continue;
      }
    } else if (syntax == Syntax::kPython) {
      if (c == '#') {
        emit(Token::Type::kComment, line_end(s, i));
        continue;
      }
    } else if (c == '*' && i + 1 < s.size() && s[i + 1] == '>') {
      emit(Token::Type::kComment, line_end(s, i));
      continue;
    }
    // Strings
    if (syntax == Syntax::kPython && (c == '"' || c == '\'') && s.substr(i, 3) == std::string(3, c)) {
      auto e = s.find(std::string(3, c), i + 3);
      emit(Token::Type::kString, e == std::string_view::npos ? s.size() : e + 3);
      continue;
    }
    if (c == '"' || c == '\'' || (c == '`' && syntax == Syntax::kCLike)) {
      emit(Token::Type::kString, scan_quoted(s, i, c, syntax != Syntax::kCobol));
      continue;
    }
    // Identifiers and numbers
    if (syntax == Syntax::kCobol && std::isalnum(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && cobol_char(s[j])) ++j;
      while (j > i + 1 && s[j - 1] == '-') --j;
      const bool has_alpha = std::any_of(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(j),
                                         [](char ch) { return std::isalpha(static_cast<unsigned char>(ch)); });
      emit(has_alpha ? Token::Type::kIdentifier : Token::Type::kNumber, j);
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      emit(Token::Type::kIdentifier, j);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && (ident_char(s[j]) || s[j] == '.')) ++j;
      emit(Token::Type::kNumber, j);
      continue;
    }
    emit(Token::Type::kPunct, i + 1);
  }
  return out;
}

std::vector<std::string> renamable_identifiers(std::string_view body, Syntax syntax) {
  const auto toks = tokenize(body, syntax);
  std::vector<std::string> ordered;
  std::set<std::string> seen;

  if (syntax == Syntax::kCobol) {
    // Declared data names: "<level> NAME ..." at the start of a line.
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].type != Token::Type::kNumber || toks[i].text.size() > 2) continue;
      if (!at_line_start(body, toks[i].offset)) continue;
      const Token* name = next_significant(toks, i);
      if (name == nullptr || name->type != Token::Type::kIdentifier) continue;
      const std::string n = upper(name->text);
      if (n == "FILLER" || n.find('-') == std::string::npos) continue;
      if (seen.insert(n).second) ordered.push_back(n);
    }
    return ordered;
  }

  std::set<std::string> excluded;
  // Names on import-style lines belong to libraries.
  for (const auto& line : split_lines(body)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    std::string_view l(line);
    l.remove_prefix(first);
    if (l.rfind("import ", 0) == 0 || l.rfind("from ", 0) == 0 || l.rfind("using ", 0) == 0 ||
        l.rfind("package ", 0) == 0) {
      for (const auto& t : tokenize(l, syntax)) {
        if (t.type == Token::Type::kIdentifier) excluded.insert(t.text);
      }
    }
  }
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.type != Token::Type::kIdentifier) continue;
    const Token* prev = prev_significant(toks, i);
    const Token* next = next_significant(toks, i);
    auto punct = [](const Token* tk, std::string_view text) {
      return tk != nullptr && tk->type == Token::Type::kPunct && tk->text == text;
    };
    // ".", "->", "::" before; "(" or "::" after.
    const bool member =
        punct(prev, ".") ||
        (prev && prev->offset > 0 && (punct(prev, ">") || punct(prev, ":")) &&
         (body[prev->offset - 1] == '-' || body[prev->offset - 1] == ':'));
    const bool called = punct(next, "(") ||
                        (punct(next, ":") && next->offset + 1 < body.size() && body[next->offset + 1] == ':');
    if (member || called) excluded.insert(t.text);
  }
  for (const auto& t : toks) {
    if (t.type != Token::Type::kIdentifier) continue;
    if (stoplist().count(t.text) || excluded.count(t.text)) continue;
    if (std::isupper(static_cast<unsigned char>(t.text[0]))) continue;  // types and constants
    if (t.text.rfind("__", 0) == 0) continue;
    if (seen.insert(t.text).second) ordered.push_back(t.text);
  }
  return ordered;
}

std::vector<std::string> PerturbationSet::member_ids() const {
  std::vector<std::string> ids;
  for (const auto& m : members) ids.push_back(m.id);
  return ids;
}

PerturbationSet perturb(const Artifact& source, PerturbationKind kind, std::size_t n,
                        std::uint64_t rng_seed, ArtifactCategory category) {
  if (category != ArtifactCategory::kSourceCode) {
    throw Error(ErrorCode::kPrecondition, "perturbations apply to source code only, not '" + source.kind + "'");
  }
  if (n == 0) throw Error(ErrorCode::kPrecondition, "perturbation count must be >= 1");
  const Syntax syntax = syntax_for_kind(source.kind);
  const std::string name(to_string(kind));

  PerturbationSet set;
  set.source_artifact_id = source.id;
  set.kind = kind;
  std::set<std::string> bodies{source.body};

  auto add_member = [&](std::string body, std::size_t index) {
    Lineage lineage = source.lineage;
    lineage.parent = source.id;
    lineage.derivation = "perturbation:" + name;
    const std::string key =
        digest_fields({"perturb", source.id, name, std::to_string(rng_seed), std::to_string(index)});
    set.members.push_back(make_artifact(source.kind, std::move(body), std::move(lineage), key));
  };
  auto inapplicable = [&](const std::string& why) {
    return Error(ErrorCode::kInapplicable, name + ": " + why);
  };
  constexpr std::size_t kAttempts = 64;

  switch (kind) {
    case PerturbationKind::kRenameIdentifiers: {
      const auto candidates = renamable_identifiers(source.body, syntax);
      if (candidates.empty()) throw inapplicable("no identifiers to rename");
      std::set<std::string> taken;
      for (const auto& t : tokenize(source.body, syntax)) {
        if (t.type == Token::Type::kIdentifier) taken.insert(syntax == Syntax::kCobol ? upper(t.text) : t.text);
      }
      for (std::size_t v = 0; v < n; ++v) {
        Rng rng(rng_seed, v);
        bool placed = false;
        for (std::size_t attempt = 0; attempt < kAttempts && !placed; ++attempt) {
          auto renames = draw_renames(candidates, taken, syntax, rng);
          auto body = apply_renames(source.body, syntax, renames);
          if (!bodies.insert(body).second) continue;
          add_member(std::move(body), v);
          set.renames.push_back(std::move(renames));
          placed = true;
        }
        if (!placed) throw inapplicable("could not produce distinct variants");
      }
      break;
    }
    case PerturbationKind::kReorderStatements: {
      auto lines = split_lines(source.body);
      const auto safe = safe_line_starts(source.body, syntax);
      const auto runs = declaration_runs(lines, safe, syntax);
      if (runs.empty()) throw inapplicable("no adjacent independent declarations");
      std::uint64_t possible = 1;
      for (const auto& [b, e] : runs) {
        possible *= factorial_saturating(e - b);
        if (possible > (1ULL << 40)) possible = 1ULL << 40;
      }
      if (possible - 1 < n) {
        throw inapplicable(fmt::format("only {} distinct reorderings exist, {} requested", possible - 1, n));
      }
      for (std::size_t v = 0; v < n; ++v) {
        Rng rng(rng_seed, v);
        bool placed = false;
        for (std::size_t attempt = 0; attempt < kAttempts * 4 && !placed; ++attempt) {
          auto shuffled = lines;
          for (const auto& [b, e] : runs) {
            std::vector<std::string> run(lines.begin() + static_cast<long>(b), lines.begin() + static_cast<long>(e));
            rng.shuffle(run);
            std::copy(run.begin(), run.end(), shuffled.begin() + static_cast<long>(b));
          }
          auto body = join_lines(shuffled);
          if (!bodies.insert(body).second) continue;
          add_member(std::move(body), v);
          placed = true;
        }
        if (!placed) throw inapplicable("could not produce distinct variants");
      }
      break;
    }
    case PerturbationKind::kCommentNoise: {
      const auto lines = split_lines(source.body);
      const auto safe = safe_line_starts(source.body, syntax);
      std::vector<std::size_t> slots;  // insert before line i
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (safe[i]) slots.push_back(i);
      }
      if (slots.empty()) throw inapplicable("no line boundary outside strings or comments");
      for (std::size_t v = 0; v < n; ++v) {
        Rng rng(rng_seed, v);
        bool placed = false;
        for (std::size_t attempt = 0; attempt < kAttempts && !placed; ++attempt) {
          const std::size_t count = 1 + rng.below(std::min<std::size_t>(3, slots.size()));
          std::map<std::size_t, std::string> inserts;
          while (inserts.size() < count) {
            const auto slot = slots[rng.below(slots.size())];
            const auto& phrase = phrases()[rng.below(phrases().size())];
            inserts.emplace(slot, phrase);
          }
          std::vector<std::string> out;
          for (std::size_t i = 0; i < lines.size(); ++i) {
            if (auto it = inserts.find(i); it != inserts.end()) {
              out.push_back(comment_line(syntax, indent_of(lines[i]), it->second));
            }
            out.push_back(lines[i]);
          }
          auto body = join_lines(out);
          if (!bodies.insert(body).second) continue;
          add_member(std::move(body), v);
          placed = true;
        }
        if (!placed) throw inapplicable("could not produce distinct variants");
      }
      break;
    }
  }
  return set;
}

nlohmann::json to_json(const PerturbationSet& set) {
  nlohmann::json renames = nlohmann::json::array();
  for (const auto& r : set.renames) renames.push_back(r);
  return {{"kind", "perturbation-set"},
          {"source_artifact_id", set.source_artifact_id},
          {"perturbation_kind", to_string(set.kind)},
          {"members", set.member_ids()},
          {"renames", renames}};
}

}  // namespace forge
