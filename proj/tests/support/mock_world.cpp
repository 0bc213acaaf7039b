#include "mock_world.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <regex>

#include <fmt/format.h>

namespace forge::testing {
namespace {

std::string capture(const std::string& text, const std::regex& re) {
  std::smatch m;
  return std::regex_search(text, m, re) ? m[1].str() : std::string();
}

std::string first_marker(const std::string& body) {
  const auto ms = markers_of(body);
  return ms.empty() ? std::string("unknown") : *ms.begin();
}

std::string code_for(const std::string& lang, const std::string& marker) {
  if (lang == "COBOL") {
    std::string upper;
    for (char c : marker) upper.push_back(c == '-' ? '-' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return fmt::format(
        "      *> Marker: {0}\n"
        "       IDENTIFICATION DIVISION.\n"
        "       PROGRAM-ID. {1}.\n"
        "       DATA DIVISION.\n"
        "       WORKING-STORAGE SECTION.\n"
        "       01 WS-TOTAL PIC 9(5) VALUE 0.\n"
        "       PROCEDURE DIVISION.\n"
        "           ADD 1 TO WS-TOTAL.\n"
        "           DISPLAY WS-TOTAL.\n"
        "           STOP RUN.\n",
        marker, upper.substr(0, 30));
  }
  if (lang == "Java") {
    return fmt::format(
        "// Marker: {}\n"
        "public class Main {{\n"
        "    public static void main(String[] args) {{\n"
        "        int total = 0;\n"
        "        total = total + 1;\n"
        "        System.out.println(total);\n"
        "    }}\n"
        "}}\n",
        marker);
  }
  return fmt::format(
      "# Marker: {}\n"
      "def main():\n"
      "    total = 0\n"
      "    total = total + 1\n"
      "    print(total)\n",
      marker);
}

std::string summary_for(const std::string& lang, const std::string& input) {
  static const std::regex unit_re(R"(==== unit \d+: (\S+) ====)");
  std::vector<std::pair<std::size_t, std::string>> units;
  for (auto it = std::sregex_iterator(input.begin(), input.end(), unit_re); it != std::sregex_iterator(); ++it) {
    units.emplace_back(static_cast<std::size_t>(it->position()), (*it)[1].str());
  }
  if (units.empty()) {
    const auto m = first_marker(input);
    return fmt::format("The {} program totals the records handled by the {} routine.\nMarker: {}\n"
                       "It reads its input, updates a running total and prints it.\n",
                       lang, m, m);
  }
  std::string out = fmt::format("The {} program runs several routines in sequence.\n\n", lang);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto end = i + 1 < units.size() ? units[i + 1].first : input.size();
    const auto section = input.substr(units[i].first, end - units[i].first);
    out += fmt::format("Part {}:\nThe routine totals records.\nMarker: {}\n\n", units[i].second, first_marker(section));
  }
  return out;
}

}  // namespace

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          fmt::format("forge-test-{}-{}-{}", ::getpid(), counter++, rd());
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::set<std::string> markers_of(std::string_view body) {
  static const std::regex re(R"(Marker: ([A-Za-z0-9_-]+))");
  std::set<std::string> out;
  const std::string s(body);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    out.insert((*it)[1].str());
  }
  return out;
}

std::string prompt_block(std::string_view prompt, std::string_view label) {
  const std::string open = std::string(label) + ":\n<<<\n";
  const auto start = prompt.find(open);
  if (start == std::string_view::npos) return {};
  const auto body = start + open.size();
  const auto end = prompt.find("\n>>>", body);
  return std::string(prompt.substr(body, end == std::string_view::npos ? std::string_view::npos : end - body));
}

ScriptedMockProvider::Responder world_responder(WorldOptions options) {
  return [options](const CompletionRequest& req) -> std::optional<std::string> {
    const std::string& u = req.user_text;
    static const std::regex seed_re(R"(Seed concept: ([^\n]+)\nPropose (\d+))");
    std::smatch m;
    if (std::regex_search(u, m, seed_re)) {
      const std::string title = m[1].str();
      const int count = std::stoi(m[2].str());
      int avoided = 0;
      const auto avoid = capture(u, std::regex(R"(Do not repeat any of these titles: ([^\n]*)\.)"));
      if (!avoid.empty()) avoided = 1 + static_cast<int>(std::count(avoid.begin(), avoid.end(), ','));
      std::string out;
      for (int k = 1; k <= count; ++k) {
        const int n = k + avoided;
        out += fmt::format("{}. {} routine {} - total the records of batch {} for {}\n", k, title, n, n, title);
      }
      return out;
    }
    if (u.rfind("Program idea: ", 0) == 0) {
      const auto title = capture(u, std::regex(R"(Program idea: (.+?) - )"));
      const auto marker = slugify(title);
      return fmt::format(
          "Write a program that totals the records of one batch.\n"
          "Inputs: a list of numeric records. Outputs: the total.\n"
          "Marker: {}\n"
          "Steps:\n1. Read the records.\n2. Add each record to the total.\n3. Print the total.\n",
          marker);
    }
    static const std::regex write_re(R"(^Write a (\S+) program that implements)");
    static const std::regex translate_re(R"(^Translate the following \S+ program into (\S+), preserving)");
    std::string lang = capture(u, write_re);
    if (lang.empty()) lang = capture(u, translate_re);
    if (!lang.empty()) return code_for(lang, first_marker(u));
    static const std::regex summary_re(R"(^Write a detailed summary of the following (\S+) program)");
    const auto src = capture(u, summary_re);
    if (!src.empty()) {
      const auto ms = markers_of(u);
      if (ms.size() == 1 && options.empty_summaries.count(*ms.begin() + "/" + src)) return std::string();
      return summary_for(src, u);
    }
    if (u.rfind("Write a language-independent description", 0) == 0) {
      const auto marker = first_marker(u);
      return fmt::format(
          "Write a program that totals the records of one batch.\nMarker: {}\n"
          "Steps:\n1. Read the records.\n2. Add them up.\n3. Print the total.\n",
          marker);
    }
    return std::nullopt;
  };
}

std::shared_ptr<ScriptedMockProvider> mock_provider(const std::string& name,
                                                    ScriptedMockProvider::Responder responder) {
  ProviderProfile profile;
  profile.name = name;
  profile.kind = ProviderKind::kScriptedMock;
  profile.model_name = "mock-" + name;
  profile.backoff_base = std::chrono::milliseconds(0);
  auto p = std::make_shared<ScriptedMockProvider>(profile);
  p->set_responder(std::move(responder));
  return p;
}

ProviderRegistry world_registry(WorldOptions options) {
  ProviderRegistry r;
  r["strong"] = mock_provider("strong", world_responder(options));
  r["tested"] = mock_provider("tested", world_responder(options));
  return r;
}

GenerationGraph desk_graph() {
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

std::vector<std::vector<std::string>> desk_paths() {
  return {{"description", "cobol", "summary"}, {"description", "java", "summary"}, {"description", "python", "summary"}};
}

std::vector<std::string> desk_path_keys() {
  return {"description>cobol>summary", "description>java>summary", "description>python>summary"};
}

std::vector<SeedConcept> desk_seeds(std::size_t seeds, std::size_t ideas_per_seed) {
  std::vector<SeedConcept> out;
  for (std::size_t i = 1; i <= seeds; ++i) {
    SeedConcept s;
    s.id = fmt::format("seed-{}", i);
    s.title = fmt::format("Seed {}", i);
    s.target_idea_count = ideas_per_seed;
    out.push_back(s);
  }
  return out;
}

ScriptedMockProvider::Responder oracle_judge(FlipFn flip) {
  return [flip](const CompletionRequest& req) -> std::optional<std::string> {
    const auto first = prompt_block(req.user_text, "First");
    const auto second = prompt_block(req.user_text, "Second");
    const auto a = markers_of(first);
    bool same = !a.empty() && a == markers_of(second);
    if (flip && flip(first, second)) same = !same;
    return fmt::format("The two artifacts were compared.\nScore: {}", same ? 7 : 1);
  };
}

ScriptedMockProvider::Responder constant_judge(int score) {
  return [score](const CompletionRequest&) -> std::optional<std::string> { return fmt::format("Score: {}", score); };
}

ScriptedMockProvider::Responder reference_oracle_judge() {
  return [](const CompletionRequest& req) -> std::optional<std::string> {
    const auto ref = markers_of(prompt_block(req.user_text, "Reference description"));
    const bool a = markers_of(prompt_block(req.user_text, "First")) == ref;
    const bool b = markers_of(prompt_block(req.user_text, "Second")) == ref;
    return fmt::format("Score: {}", a == b ? 4 : (a ? 7 : 1));
  };
}

}  // namespace forge::testing
