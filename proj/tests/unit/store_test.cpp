#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "forge/artifact.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/store.hpp"
#include "mock_world.hpp"

using namespace forge;
using forge::testing::TempDir;

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(CanonicalJson, SortedAndCompact) {
  const auto j = nlohmann::json::parse(R"({"b": [1, 2], "a": {"z": 1, "y": "x"}})");
  EXPECT_EQ(canonical_json(j), R"({"a":{"y":"x","z":1},"b":[1,2]})");
}

TEST(Store, PutIsIdempotentAndContentAddressed) {
  TempDir dir;
  Store store(dir.path());
  const nlohmann::json payload = {{"k", 1}, {"v", "x"}};
  const auto id = store.put(RecordType::kReport, payload);
  EXPECT_EQ(store.put(RecordType::kReport, nlohmann::json::parse(R"({"v":"x","k":1})")), id);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(id, Store::record_id(RecordType::kReport, canonical_json(payload)));
  EXPECT_NE(id, store.put(RecordType::kPlan, payload));
  EXPECT_EQ(store.get(id).json(), payload);
  EXPECT_EQ(lines_of(dir.path() / "records.ndjson").size(), 2u);
}

TEST(Store, TimestampsStayOutOfTheId) {
  TempDir a_dir;
  TempDir b_dir;
  Store a(a_dir.path());
  Store b(b_dir.path());
  a.set_clock([] { return std::string("2020-01-01T00:00:00Z"); });
  b.set_clock([] { return std::string("2030-01-01T00:00:00Z"); });
  const auto id = a.put(RecordType::kLabel, {{"x", 1}});
  EXPECT_EQ(b.put(RecordType::kLabel, {{"x", 1}}), id);
  EXPECT_EQ(a.get(id).created_at, "2020-01-01T00:00:00Z");
  EXPECT_EQ(a.ids(), b.ids());
}

TEST(Store, ReopenAndListByType) {
  TempDir dir;
  std::string first;
  {
    Store store(dir.path());
    first = store.put(RecordType::kDataset, {{"n", 1}});
    store.put(RecordType::kDataset, {{"n", 2}});
    store.put(RecordType::kReport, {{"n", 3}});
  }
  Store store(dir.path());
  EXPECT_EQ(store.size(), 3u);
  const auto ids = store.list(RecordType::kDataset);
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], first);
  EXPECT_EQ(store.list(RecordType::kDataset, [](const nlohmann::json& j) { return j["n"] == 2; }).size(), 1u);
  EXPECT_EQ(store.records(RecordType::kReport).size(), 1u);
  EXPECT_FALSE(store.find("nope"));
  try {
    store.get("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(Store, TamperedLinesAreQuarantined) {
  TempDir dir;
  std::string id;
  {
    Store store(dir.path());
    id = store.put(RecordType::kReport, {{"score", 1}});
    store.put(RecordType::kReport, {{"score", 2}});
  }
  auto lines = lines_of(dir.path() / "records.ndjson");
  const auto pos = lines[0].find("\"score\":1");
  ASSERT_NE(pos, std::string::npos);
  lines[0].replace(pos, 9, "\"score\":9");
  {
    std::ofstream out(dir.path() / "records.ndjson", std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
    out << "garbage line\n";
  }
  Store store(dir.path());
  EXPECT_EQ(store.size(), 1u);
  EXPECT_FALSE(store.contains(id));
  ASSERT_EQ(store.quarantined().size(), 2u);
  EXPECT_EQ(store.quarantined()[0].line, 1u);
}

TEST(Store, ReloadSeesOtherWriters) {
  TempDir dir;
  Store reader(dir.path());
  Store writer(dir.path());
  const auto id = writer.put(RecordType::kLabel, {{"task", "t1"}});
  reader.reload();
  EXPECT_TRUE(reader.contains(id));
}

TEST(Store, ConcurrentWritersKeepEveryRecord) {
  TempDir dir;
  Store a(dir.path());
  Store b(dir.path());
  std::thread ta([&] {
    for (int i = 0; i < 50; ++i) a.put(RecordType::kLabel, {{"i", i}, {"w", "a"}});
  });
  std::thread tb([&] {
    for (int i = 0; i < 50; ++i) b.put(RecordType::kLabel, {{"i", i}, {"w", "b"}});
  });
  ta.join();
  tb.join();
  Store check(dir.path());
  EXPECT_EQ(check.size(), 100u);
  EXPECT_TRUE(check.quarantined().empty());
}

TEST(Artifacts, IdIsKindAndBody) {
  const auto a = make_artifact("java", "class A {}", Lineage{"idea", "description>java", {}, {}, {}, {}, "generation"});
  const auto b = make_artifact("java", "class A {}", Lineage{});
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.id, artifact_id("java", "class A {}"));
  EXPECT_NE(a.id, artifact_id("python", "class A {}"));
  EXPECT_EQ(artifact_from_json(to_json(a)).lineage, a.lineage);
}

TEST(Artifacts, RepositoryIndexesAndWalksAncestry) {
  TempDir dir;
  Store store(dir.path());
  ArtifactRepository repo(store);
  const auto root = repo.put(make_artifact("description", "Write a program.", {}, "key-root"));
  Lineage child_lineage;
  child_lineage.parent = root.id;
  const auto child = repo.put(make_artifact("java", "class A {}", child_lineage, "key-child"));
  EXPECT_EQ(repo.get(child.id).lineage.parent, root.id);
  EXPECT_EQ(repo.by_generation_key("key-root")->id, root.id);
  const auto chain = repo.ancestry(child.id);
  ASSERT_EQ(chain.size(), 2u);
  EXPECT_EQ(chain[1].id, root.id);
  EXPECT_FALSE(repo.find("missing"));
  EXPECT_THROW(repo.get("missing"), Error);

  ArtifactRepository reopened(store);
  EXPECT_EQ(reopened.all().size(), 2u);
  EXPECT_FALSE(reopened.get(child.id).created_at.empty());
}
