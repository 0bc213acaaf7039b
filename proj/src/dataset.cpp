#include "forge/claims.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/sampling.hpp"
#include "forge/store.hpp"

namespace forge {
namespace {

std::vector<std::string> split_path_key(const std::string& key) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto at = key.find('>', pos);
    out.push_back(key.substr(pos, at == std::string::npos ? std::string::npos : at - pos));
    if (at == std::string::npos) break;
    pos = at + 1;
  }
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

std::size_t ClaimDataset::true_count() const {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.label; }));
}

std::size_t ClaimDataset::false_count() const { return pairs.size() - true_count(); }

std::size_t ClaimDataset::within_cluster_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.within_cluster; }));
}

const ClaimTuple* ClaimDataset::tuple_for(const std::string& summary_id) const {
  for (const auto& t : tuples) {
    if (t.summary_id == summary_id) return &t;
  }
  return nullptr;
}

std::string ClaimDataset::fingerprint() const {
  nlohmann::json j = to_json(*this);
  return sha256_hex(canonical_json(j.at("pairs")));
}

nlohmann::json to_json(const ClaimDataset& d) {
  nlohmann::json tuples = nlohmann::json::array();
  for (const auto& t : d.tuples) {
    tuples.push_back({{"index", t.index},
                      {"description_id", t.description_id},
                      {"idea_id", t.idea_id},
                      {"seed_id", t.seed_id},
                      {"cluster", t.cluster},
                      {"language", t.language},
                      {"path_key", t.path_key},
                      {"summary_id", t.summary_id}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : d.pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"label", p.label}, {"within_cluster", p.within_cluster}});
  }
  nlohmann::json missing = nlohmann::json::array();
  for (const auto& m : d.missing) {
    missing.push_back({{"idea_id", m.idea_id}, {"path_key", m.path_key}, {"reason", m.reason}});
  }
  return {{"kind", "claim-dataset"},
          {"tuples", tuples},
          {"pairs", pairs},
          {"symmetric", d.symmetric},
          {"missing", missing},
          {"skipped_descriptions", d.skipped_descriptions}};
}

ClaimDataset claim_dataset_from_json(const nlohmann::json& j) {
  ClaimDataset d;
  for (const auto& t : j.at("tuples")) {
    d.tuples.push_back(ClaimTuple{t.at("index").get<std::size_t>(), t.at("description_id").get<std::string>(),
                                  t.at("idea_id").get<std::string>(), t.at("seed_id").get<std::string>(),
                                  t.at("cluster").get<bool>(), t.at("language").get<std::string>(),
                                  t.at("path_key").get<std::string>(), t.at("summary_id").get<std::string>()});
  }
  for (const auto& p : j.at("pairs")) {
    d.pairs.push_back(LabeledPair{p.at("a").get<std::string>(), p.at("b").get<std::string>(),
                                  p.at("label").get<bool>(), p.value("within_cluster", false)});
  }
  d.symmetric = j.value("symmetric", false);
  for (const auto& m : j.value("missing", nlohmann::json::array())) {
    d.missing.push_back(MissingSummary{m.at("idea_id").get<std::string>(), m.at("path_key").get<std::string>(),
                                       m.at("reason").get<std::string>()});
  }
  d.skipped_descriptions = j.value("skipped_descriptions", std::vector<std::string>{});
  return d;
}

ClaimDataset build_claim_dataset(const Corpus& corpus, const std::vector<std::string>& path_keys,
                                 const DatasetOptions& options) {
  if (path_keys.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset needs at least one path");
  if (options.false_pairs.ratio < 1) throw Error(ErrorCode::kInvalidArgument, "false pair ratio must be >= 1");
  if (options.false_pairs.within_cluster_share &&
      (*options.false_pairs.within_cluster_share < 0 || *options.false_pairs.within_cluster_share > 1)) {
    throw Error(ErrorCode::kInvalidArgument, "within-cluster share must lie in [0, 1]");
  }

  ClaimDataset d;
  d.symmetric = options.include_symmetry;
  std::size_t index = 0;
  for (const auto& entry : corpus.entries) {
    if (options.cluster_entries_only && !entry.cluster) continue;
    std::vector<ClaimTuple> found;
    std::vector<MissingSummary> missing;
    for (const auto& key : path_keys) {
      auto it = entry.runs.find(key);
      std::string reason;
      if (it == entry.runs.end()) {
        reason = "path not run";
      } else if (it->second.failure) {
        reason = fmt::format("hop {} failed: {}", it->second.failure->hop, it->second.failure->message);
      } else if (it->second.artifacts.size() < 2 || blank(it->second.last().body)) {
        reason = "empty summary";
      }
      if (!reason.empty()) {
        missing.push_back(MissingSummary{entry.idea.id, key, reason});
        continue;
      }
      const auto kinds = split_path_key(key);
      ClaimTuple t;
      t.description_id = entry.description.id;
      t.idea_id = entry.idea.id;
      t.seed_id = entry.idea.seed_id;
      t.cluster = entry.cluster;
      t.language = kinds.size() >= 2 ? kinds[kinds.size() - 2] : kinds.front();
      t.path_key = key;
      t.summary_id = it->second.last().id;
      found.push_back(std::move(t));
    }
    d.missing.insert(d.missing.end(), missing.begin(), missing.end());
    if (!missing.empty() && options.missing == MissingPolicy::kSkipDescription) {
      d.skipped_descriptions.push_back(entry.idea.id);
      continue;
    }
    if (found.empty()) {
      d.skipped_descriptions.push_back(entry.idea.id);
      continue;
    }
    for (auto& t : found) {
      t.index = index;
      d.tuples.push_back(std::move(t));
    }
    ++index;
  }

  auto emit = [&](const ClaimTuple& a, const ClaimTuple& b, bool label) {
    const bool within = label ? a.cluster : (a.cluster && b.cluster && a.seed_id == b.seed_id);
    d.pairs.push_back(LabeledPair{a.summary_id, b.summary_id, label, within});
    if (options.include_symmetry) d.pairs.push_back(LabeledPair{b.summary_id, a.summary_id, label, within});
  };

  std::size_t true_unordered = 0;
  for (std::size_t i = 0; i < d.tuples.size(); ++i) {
    for (std::size_t j = i + 1; j < d.tuples.size(); ++j) {
      if (d.tuples[i].index != d.tuples[j].index) continue;
      emit(d.tuples[i], d.tuples[j], true);
      ++true_unordered;
    }
  }
  if (true_unordered == 0) {
    throw Error(ErrorCode::kInsufficientPopulation,
                "no same-description summary pairs; every description needs summaries on two paths");
  }

  std::vector<Tuple> within, across;
  for (std::size_t i = 0; i < d.tuples.size(); ++i) {
    for (std::size_t j = i + 1; j < d.tuples.size(); ++j) {
      const auto& a = d.tuples[i];
      const auto& b = d.tuples[j];
      if (a.index == b.index) continue;
      Tuple t{std::to_string(i), std::to_string(j)};
      (a.cluster && b.cluster && a.seed_id == b.seed_id ? within : across).push_back(std::move(t));
    }
  }

  const std::size_t needed = true_unordered * options.false_pairs.ratio;
  std::vector<Tuple> chosen;
  const auto seed = options.false_pairs.rng_seed;
  try {
    if (options.false_pairs.within_cluster_share) {
      const auto k_within = static_cast<std::size_t>(
          std::llround(*options.false_pairs.within_cluster_share * static_cast<double>(needed)));
      chosen = sample_from(within, k_within, seed);
      auto rest = sample_from(across, needed - k_within, seed + 1);
      chosen.insert(chosen.end(), rest.begin(), rest.end());
    } else {
      std::vector<Tuple> all = within;
      all.insert(all.end(), across.begin(), across.end());
      chosen = sample_from(std::move(all), needed, seed);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::kInsufficientPopulation,
                fmt::format("cannot draw {} false pairs ({}); add more descriptions", needed, e.what()));
  }
  std::sort(chosen.begin(), chosen.end(), [](const Tuple& x, const Tuple& y) {
    return std::make_pair(std::stoul(x[0]), std::stoul(x[1])) < std::make_pair(std::stoul(y[0]), std::stoul(y[1]));
  });
  for (const auto& t : chosen) emit(d.tuples[std::stoul(t[0])], d.tuples[std::stoul(t[1])], false);
  return d;
}

}  // namespace forge
