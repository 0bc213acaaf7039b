#include <sstream>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/graph.hpp"

namespace forge {
namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.emplace_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

void check_field(const std::string& value, const char* what) {
  if (value.find_first_of("\t\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " contains a tab or newline: '" + value + "'");
  }
}

}  // namespace

GenerationGraph parse_graph_tsv(std::string_view text) {
  GenerationGraph g;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    auto f = split_tabs(line);
    const auto where = " (line " + std::to_string(line_no) + ")";
    try {
      if (f[0] == "kind" && f.size() == 3) {
        g.add_kind(f[1], parse_category(f[2]));
      } else if (f[0] == "edge" && f.size() == 5) {
        g.add_edge(g.kind_id(f[1]), g.kind_id(f[2]), parse_label(f[3]), f[4]);
      } else {
        throw Error(ErrorCode::kParse, "malformed record");
      }
    } catch (const Error& e) {
      throw Error(e.code(), e.what() + where);
    }
  }
  return g;
}

std::string to_graph_tsv(const GenerationGraph& graph) {
  std::ostringstream out;
  for (const auto& k : graph.kinds()) {
    check_field(k.name, "kind name");
    out << "kind\t" << k.name << '\t' << to_string(k.category) << '\n';
  }
  for (const auto& e : graph.edges()) {
    check_field(e.provider_binding, "provider binding");
    out << "edge\t" << graph.kind(e.from).name << '\t' << graph.kind(e.to).name << '\t'
        << to_string(e.label) << '\t' << e.provider_binding << '\n';
  }
  return out.str();
}

GenerationGraph parse_graph_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("graph json: ") + e.what());
  }
  GenerationGraph g;
  try {
    for (const auto& k : doc.at("kinds")) {
      g.add_kind(k.at("name").get<std::string>(),
                 parse_category(k.at("category").get<std::string>()));
    }
    for (const auto& e : doc.at("edges")) {
      g.add_edge(g.kind_id(e.at("from").get<std::string>()),
                 g.kind_id(e.at("to").get<std::string>()),
                 parse_label(e.at("label").get<std::string>()),
                 e.value("provider", std::string{}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("graph json: ") + e.what());
  }
  return g;
}

std::string to_graph_json(const GenerationGraph& graph) {
  nlohmann::json doc;
  doc["kinds"] = nlohmann::json::array();
  doc["edges"] = nlohmann::json::array();
  for (const auto& k : graph.kinds()) {
    doc["kinds"].push_back({{"name", k.name}, {"category", to_string(k.category)}});
  }
  for (const auto& e : graph.edges()) {
    doc["edges"].push_back({{"from", graph.kind(e.from).name},
                            {"to", graph.kind(e.to).name},
                            {"label", to_string(e.label)},
                            {"provider", e.provider_binding}});
  }
  return doc.dump();
}

GenerationGraph parse_graph(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_graph_json(text);
  return parse_graph_tsv(text);
}

}  // namespace forge
