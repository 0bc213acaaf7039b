#include "forge/compose.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/perturb.hpp"

namespace forge {
namespace {

std::string call_line(Syntax syntax, const std::string& name) {
  switch (syntax) {
    case Syntax::kPython: return name + "()";
    case Syntax::kCobol: return "           CALL '" + name + "'.";
    case Syntax::kCLike: break;
  }
  return "    " + name + "();";
}

std::string identifier_safe(std::string_view text, Syntax syntax) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(syntax == Syntax::kCobol ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
    } else if (!out.empty() && out.back() != '_' && out.back() != '-') {
      out.push_back(syntax == Syntax::kCobol ? '-' : '_');
    }
  }
  while (!out.empty() && (out.back() == '_' || out.back() == '-')) out.pop_back();
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out = "unit_" + out;
  return out;
}

}  // namespace

std::string unit_name(const Artifact& unit) {
  const auto& idea = unit.lineage.idea_id;
  if (!idea.empty()) {
    const auto slash = idea.rfind('/');
    return slash == std::string::npos ? idea : idea.substr(slash + 1);
  }
  return unit.id.substr(0, 8);
}

std::string CompositionRecord::extract(const std::string& composed_body, std::size_t i) const {
  const auto& r = ranges.at(i);
  if (r.offset + r.length > composed_body.size()) {
    throw Error(ErrorCode::kOutOfRange, "unit range exceeds composed body");
  }
  return composed_body.substr(r.offset, r.length);
}

std::pair<Artifact, CompositionRecord> compose_large(const std::vector<Artifact>& units,
                                                     std::vector<std::size_t> order) {
  if (units.size() < 2) {
    throw Error(ErrorCode::kPrecondition,
                fmt::format("composition needs at least 2 units (got {})", units.size()));
  }
  for (const auto& u : units) {
    if (u.kind != units.front().kind) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("mixed unit kinds: '{}' and '{}'", units.front().kind, u.kind));
    }
  }
  if (order.empty()) {
    for (std::size_t i = 0; i < units.size(); ++i) order.push_back(i);
  }
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == units.size();
    for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == i;
    if (!perm) throw Error(ErrorCode::kInvalidArgument, "order must be a permutation of the unit indices");
  }

  const std::string kind = units.front().kind;
  const Syntax syntax = syntax_for_kind(kind);
  const std::string cm = syntax == Syntax::kCobol ? "      *>" : line_comment(syntax);

  // Distinct call names, disambiguated by position when ideas collide.
  std::vector<std::string> names;
  std::set<std::string> used;
  for (std::size_t i = 0; i < units.size(); ++i) {
    std::string n = identifier_safe(unit_name(units[i]), syntax);
    if (!used.insert(n).second) {
      n += fmt::format("_{}", i + 1);
      used.insert(n);
    }
    names.push_back(n);
  }

  CompositionRecord record;
  record.dispatch_style = fmt::format("numbered call table ({} comments, {} calls)", cm,
                                      syntax == Syntax::kCobol ? "CALL" : "function");
  std::string body;
  for (std::size_t i = 0; i < units.size(); ++i) {
    body += fmt::format("{} ==== unit {}: {} ====\n", cm, i + 1, names[i]);
    UnitRange r{units[i].id, names[i], body.size(), units[i].body.size()};
    body += units[i].body;
    if (body.back() != '\n') body.push_back('\n');
    body += fmt::format("{} ==== end unit {} ====\n\n", cm, i + 1);
    record.unit_ids.push_back(units[i].id);
    record.ranges.push_back(std::move(r));
  }
  body += fmt::format("{} ==== dispatch table ====\n", cm);
  for (std::size_t step = 0; step < order.size(); ++step) {
    body += fmt::format("{} {}. {}\n", cm, step + 1, names[order[step]]);
  }
  for (auto idx : order) body += call_line(syntax, names[idx]) + "\n";
  record.call_order = order;

  Lineage lineage;
  lineage.derivation = "composition";
  lineage.path = kind;
  std::string joined;
  for (const auto& u : units) joined += u.id + ",";
  for (auto i : order) joined += std::to_string(i) + ",";
  Artifact composed = make_artifact(kind, std::move(body), std::move(lineage),
                                    digest_fields({"compose", joined}));
  record.composed_artifact_id = composed.id;
  return {std::move(composed), std::move(record)};
}

nlohmann::json to_json(const CompositionRecord& record) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& r : record.ranges) {
    ranges.push_back({{"unit_id", r.unit_id}, {"unit_name", r.unit_name}, {"offset", r.offset}, {"length", r.length}});
  }
  return {{"kind", "composition"},
          {"composed_artifact_id", record.composed_artifact_id},
          {"unit_ids", record.unit_ids},
          {"call_order", record.call_order},
          {"dispatch_style", record.dispatch_style},
          {"ranges", ranges}};
}

CompositionRecord composition_from_json(const nlohmann::json& j) {
  CompositionRecord r;
  r.composed_artifact_id = j.at("composed_artifact_id").get<std::string>();
  r.unit_ids = j.at("unit_ids").get<std::vector<std::string>>();
  r.call_order = j.at("call_order").get<std::vector<std::size_t>>();
  r.dispatch_style = j.value("dispatch_style", std::string{});
  for (const auto& x : j.at("ranges")) {
    r.ranges.push_back(UnitRange{x.at("unit_id").get<std::string>(), x.at("unit_name").get<std::string>(),
                                 x.at("offset").get<std::size_t>(), x.at("length").get<std::size_t>()});
  }
  return r;
}

}  // namespace forge
