#include <gtest/gtest.h>

#include <httplib.h>

#include "forge/artifact.hpp"
#include "forge/error.hpp"
#include "forge/labels.hpp"
#include "forge/server.hpp"
#include "mock_world.hpp"

using namespace forge;
using forge::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

struct Book {
  TempDir dir;
  Store store{dir.path()};
  ArtifactRepository repo{store};
  std::vector<std::string> ids;

  Book() {
    Lineage lineage;
    lineage.idea_id = "secret-idea";
    for (const char* body : {"summary a", "summary b", "summary c", "summary d"}) {
      ids.push_back(repo.put(make_artifact("summary", body, lineage)).id);
    }
  }

  SamplePlan plan(std::size_t n) const {
    SamplePlan p;
    p.n = n;
    p.rng_seed = 3;
    return p;
  }
};

std::string task_for(const LabelBook& book, const std::string& batch, const std::string& input) {
  for (const auto& t : book.tasks(std::nullopt, batch)) {
    if (t.inputs.front() == input) return t.id;
  }
  ADD_FAILURE() << "no task for " << input;
  return {};
}

// Pairwise order agreement between two rank maps over the items both know,
// skipping human ties; a judge tie counts as disagreement.
Rational agreement_oracle(const std::map<std::string, int>& human, const std::map<std::string, int>& judge) {
  std::int64_t agree = 0;
  std::int64_t total = 0;
  for (auto i = human.begin(); i != human.end(); ++i) {
    for (auto j = std::next(i); j != human.end(); ++j) {
      if (i->second == j->second) continue;
      ++total;
      const int h = i->second < j->second ? -1 : 1;
      const int g = judge.at(i->first) == judge.at(j->first) ? 0 : judge.at(i->first) < judge.at(j->first) ? -1 : 1;
      agree += h == g ? 1 : 0;
    }
  }
  return Rational(agree, total);
}

}  // namespace

TEST(LabelBook, RankBatchSubmissionRules) {
  Book b;
  LabelBook book(b.store);
  const std::map<std::string, int> judge = {{b.ids[0], 1}, {b.ids[1], 2}, {b.ids[2], 3}, {b.ids[3], 4}};
  const auto batch = book.create_batch(b.ids, b.plan(4), LabelKind::kRankSingle, "summarization", judge);
  EXPECT_EQ(batch.task_ids.size(), 4u);
  EXPECT_EQ(book.tasks("open").size(), 4u);

  const auto t0 = task_for(book, batch.id, b.ids[0]);
  EXPECT_EQ(code_of([&] { book.submit(t0, 8, "ann"); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { book.submit(t0, std::string("first"), "ann"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { book.submit("nope", 3, "ann"); }), ErrorCode::kNotFound);
  const auto done = book.submit(t0, 1, "ann");
  EXPECT_EQ(done.status(), "done");
  EXPECT_FALSE(done.submitted_at.empty());
  EXPECT_EQ(code_of([&] { book.submit(t0, 2, "bob"); }), ErrorCode::kConflict);

  EXPECT_EQ(book.agreement(batch.id).status(), "no-data");
  const std::map<std::string, int> human = {{b.ids[0], 1}, {b.ids[1], 3}, {b.ids[2], 2}, {b.ids[3], 4}};
  for (std::size_t i = 1; i < 4; ++i) book.submit(task_for(book, batch.id, b.ids[i]), human.at(b.ids[i]), "ann");
  const auto a = book.agreement(batch.id);
  EXPECT_EQ(a.labeled, 4u);
  EXPECT_EQ(a.compared, 6u);
  EXPECT_EQ(a.fraction, agreement_oracle(human, judge));
  EXPECT_EQ(a.fraction, Rational(5, 6));
  EXPECT_EQ(a.status(), "reject");

  // A second book over the same store sees every submission.
  LabelBook reopened(b.store);
  EXPECT_TRUE(reopened.tasks("open").empty());
  EXPECT_EQ(reopened.find_task(t0)->labeler, "ann");
}

TEST(LabelBook, PreferBatchesAndExport) {
  Book b;
  LabelBook book(b.store);
  const auto batch = book.create_batch(b.ids, b.plan(6), LabelKind::kPreferPair, "", {{b.ids[0], 9}});
  ASSERT_EQ(batch.task_ids.size(), 6u);
  const auto first = book.find_task(batch.task_ids[0]).value();
  EXPECT_EQ(first.inputs.size(), 2u);
  EXPECT_EQ(code_of([&] { book.submit(first.id, 3, "ann"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { book.submit(first.id, std::string("both"), "ann"); }), ErrorCode::kInvalidArgument);
  book.submit(first.id, std::string("second"), "ann");

  const auto table = book.export_table(batch.id);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 7);
  EXPECT_EQ(table.rfind("task_id\tkind", 0), 0u);
  EXPECT_NE(table.find("\tdone\tsecond\tann\t"), std::string::npos);
  const auto j = book.export_batch(batch.id);
  EXPECT_EQ(j.at("tasks").size(), 6u);
  EXPECT_EQ(j.at("agreement").at("status"), "no-data");  // judge ranks cover one item only

  EXPECT_EQ(code_of([&] { book.create_batch(b.ids, b.plan(7), LabelKind::kPreferPair); }),
            ErrorCode::kInsufficientPopulation);
  EXPECT_EQ(code_of([&] { book.create_batch(b.ids, b.plan(2), LabelKind::kRankSingle, "no-such-scale"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { book.agreement("missing"); }), ErrorCode::kNotFound);
  EXPECT_EQ(book.batches().size(), 1u);
  EXPECT_EQ(parse_label_kind("prefer-pair"), LabelKind::kPreferPair);
}

class ReviewApi : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<ReviewServer>(b_.store);
    port_ = server_->bind();
    server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    batch_ = server_->labels().create_batch(b_.ids, b_.plan(4), LabelKind::kRankSingle, "summarization",
                                            {{b_.ids[0], 1}, {b_.ids[1], 2}, {b_.ids[2], 3}, {b_.ids[3], 4}});
  }
  void TearDown() override { server_->stop(); }

  nlohmann::json get(const std::string& path, int want = 200) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, want) << path << ": " << res->body;
    return nlohmann::json::parse(res->body);
  }

  Book b_;
  std::unique_ptr<ReviewServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
  LabelBatch batch_;
};

TEST_F(ReviewApi, ListsTasksAndHidesLineage) {
  const auto open = get("/api/tasks?status=open");
  ASSERT_EQ(open.at("tasks").size(), 4u);
  get("/api/tasks?status=weird", 400);
  EXPECT_EQ(get("/api/tasks?status=open&batch=" + batch_.id).at("tasks").size(), 4u);
  EXPECT_TRUE(get("/api/tasks?batch=other").at("tasks").empty());

  const auto id = open.at("tasks")[0].at("id").get<std::string>();
  const auto task = get("/api/tasks/" + id);
  ASSERT_EQ(task.at("artifacts").size(), 1u);
  const auto& art = task.at("artifacts")[0];
  EXPECT_EQ(art.at("kind"), "summary");
  EXPECT_EQ(art.at("body").get<std::string>().rfind("summary ", 0), 0u);
  EXPECT_FALSE(art.contains("lineage"));
  EXPECT_EQ(task.dump().find("secret-idea"), std::string::npos);
  EXPECT_EQ(task.at("scale_levels").at("name"), "summarization");
  EXPECT_EQ(get("/api/tasks/nope", 404).at("error"), "not-found");
}

TEST_F(ReviewApi, LabelSubmissionAndAgreement) {
  const auto id = batch_.task_ids[0];
  const auto url = "/api/tasks/" + id + "/label";
  auto res = client_->Post(url, R"({"label": 9})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Post(url, R"({"label": 5, "labeler": "ann"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(nlohmann::json::parse(res->body).at("status"), "done");
  res = client_->Post(url, R"({"label": 6, "labeler": "bob"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  const auto conflict = nlohmann::json::parse(res->body);
  EXPECT_EQ(conflict.at("task").at("labeler"), "ann");
  EXPECT_EQ(conflict.at("task").at("label"), 5);
  res = client_->Post(url, "not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Post("/api/tasks/nope/label", R"({"label": 5})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  EXPECT_EQ(get("/api/tasks?status=done").at("tasks").size(), 1u);
  EXPECT_EQ(get("/api/batches").at("batches").size(), 1u);
  get("/api/agreement", 400);
  const auto a = get("/api/agreement?batch=" + batch_.id);
  EXPECT_EQ(a.at("labeled"), 1);
  EXPECT_EQ(a.at("status"), "no-data");
  get("/api/agreement?batch=missing", 404);
}

TEST_F(ReviewApi, ServesStoredReports) {
  const auto id = b_.store.put(RecordType::kReport, {{"kind", "regression"}, {"run_id", "r1"}});
  EXPECT_EQ(get("/api/reports/" + id).at("run_id"), "r1");
  get("/api/reports/" + b_.ids[0], 404);  // an artifact, not a report
  get("/api/reports/missing", 404);
}
