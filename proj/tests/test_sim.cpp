#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crowd/errors.hpp"
#include "crowd/instance_io.hpp"
#include "crowd/sim.hpp"

using namespace crowd;

namespace {

Instance noiseless(std::size_t m = 3) {
  std::vector<WorkerClass> classes;
  for (std::size_t k = 0; k < m; ++k) {
    classes.push_back({"n" + std::to_string(k), Money::from_units(1.0 + k), ConfusionMatrix(1.0, 1.0)});
  }
  return Instance(classes, Prior::uniform(), "noiseless");
}

}  // namespace

TEST_CASE("sample_truth") {
  const auto zeros = sample_truth(Prior(1.0, 0.0), 1000, 3);
  for (auto l : zeros.labels) CHECK(l == 0);

  const auto half = sample_truth(Prior::uniform(), 100000, 42);
  double mean = 0.0;
  for (auto l : half.labels) mean += l;
  mean /= 100000.0;
  CHECK(std::abs(mean - 0.5) < 0.01);

  CHECK(sample_truth(Prior(0.3, 0.7), 5000, 9).labels == sample_truth(Prior(0.3, 0.7), 5000, 9).labels);
  CHECK(sample_truth(Prior(0.3, 0.7), 5000, 9).labels != sample_truth(Prior(0.3, 0.7), 5000, 10).labels);
  CHECK_THROWS(sample_truth(Prior::uniform(), 0, 1));
}

TEST_CASE("query on a noiseless class returns the truth") {
  const Instance inst = noiseless();
  const auto truth = sample_truth(inst.prior(), 50, 1);
  Platform platform(inst, truth, 5);
  for (std::size_t j = 0; j < 50; ++j) {
    auto s = platform.stream(Phase::Exploit, j, 0);
    for (int r = 0; r < 5; ++r) CHECK(s.next() == truth.labels[j]);
  }
}

TEST_CASE("query frequencies follow the confusion matrix") {
  std::vector<WorkerClass> classes{{"a", Money::from_units(1.0), ConfusionMatrix(0.9, 0.9)},
                                   {"b", Money::from_units(1.0), ConfusionMatrix(0.7, 0.6)},
                                   {"c", Money::from_units(1.0), ConfusionMatrix(0.8, 0.8)}};
  const Instance inst(classes, Prior(1.0, 0.0));
  const auto truth = sample_truth(inst.prior(), 1, 0);
  Platform platform(inst, truth, 77);
  auto s = platform.stream(Phase::Exploit, 0, 0);
  std::size_t zeros = 0;
  for (int i = 0; i < 100000; ++i) zeros += s.next() == 0;
  CHECK(std::abs(zeros / 100000.0 - 0.9) < 0.01);
}

TEST_CASE("ledger accounting is exact") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 10, 1);
  Platform platform(inst, truth, 2);
  auto s = platform.stream(Phase::Exploit, 3, 2);
  for (int q = 0; q < 37; ++q) s.next();
  CHECK(platform.ledger().total() == inst[2].price * 37);
  CHECK(platform.ledger().class_count(2) == 37);
  CHECK(platform.ledger().entries().size() == 37);
}

TEST_CASE("explore_matrix") {
  const Instance inst = noiseless(3);
  const auto truth = sample_truth(inst.prior(), 4, 8);
  Platform platform(inst, truth, 8);
  const LabelMatrix z = explore_matrix(platform);
  CHECK(z.classes() == 3);
  CHECK(z.items() == 4);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 4; ++j) CHECK(z.at(k, j) == truth.labels[j]);
  Money per_item;
  for (const auto& c : inst.classes()) per_item += c.price;
  CHECK(platform.ledger().total() == per_item * 4);
}

TEST_CASE("explore rows agree with truth at the expected rate") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 10000, 21);
  Platform platform(inst, truth, 21);
  const LabelMatrix z = explore_matrix(platform);
  for (std::size_t k = 0; k < inst.size(); ++k) {
    std::size_t agree = 0;
    for (std::size_t j = 0; j < z.items(); ++j) agree += z.at(k, j) == truth.labels[j];
    const auto& c = inst[k].confusion;
    const double expected = inst.prior().w0() * c.c0() + inst.prior().w1() * c.c1();
    CHECK(std::abs(agree / 10000.0 - expected) < 0.01);
  }
}

TEST_CASE("sub-streams are independent of other items' query counts") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 3, 4);
  Platform a(inst, truth, 99), b(inst, truth, 99);
  auto a0 = a.stream(Phase::Exploit, 0, 1);
  for (int i = 0; i < 5; ++i) a0.next();
  auto b0 = b.stream(Phase::Exploit, 0, 1);
  for (int i = 0; i < 50; ++i) b0.next();
  auto a1 = a.stream(Phase::Exploit, 1, 1);
  auto b1 = b.stream(Phase::Exploit, 1, 1);
  for (int i = 0; i < 20; ++i) CHECK(a1.next() == b1.next());
}

TEST_CASE("property: errors are conditionally independent given the true label") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 100000, 5);
  Platform platform(inst, truth, 5);
  const LabelMatrix z = explore_matrix(platform);
  for (int label = 0; label < 2; ++label) {
    double n = 0, ea = 0, eb = 0, eab = 0;
    for (std::size_t j = 0; j < z.items(); ++j) {
      if (truth.labels[j] != label) continue;
      const double x = z.at(0, j) != label, y = z.at(1, j) != label;
      n += 1;
      ea += x;
      eb += y;
      eab += x * y;
    }
    CHECK(std::abs(eab / n - (ea / n) * (eb / n)) < 0.01);
  }
}

TEST_CASE("property: ledger conservation over classes") {
  const Instance inst = bundled_p1_asym();
  const auto truth = sample_truth(inst.prior(), 200, 6);
  Platform platform(inst, truth, 6);
  explore_matrix(platform);
  auto s = platform.stream(Phase::Exploit, 7, 3);
  for (int i = 0; i < 11; ++i) s.next();
  Money sum;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    CHECK(platform.ledger().class_total(k) == inst[k].price * static_cast<std::int64_t>(platform.ledger().class_count(k)));
    sum += platform.ledger().class_total(k);
  }
  CHECK(sum == platform.ledger().total());
  Money entries;
  for (const auto& e : platform.ledger().entries()) entries += e.price;
  CHECK(entries == platform.ledger().total());
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {
std::vector<ResponseRecord> worker_records(const std::string& worker, int items_per_label, int correct0, int correct1,
                                           int offset = 0) {
  std::vector<ResponseRecord> out;
  for (int i = 0; i < items_per_label; ++i) {
    out.push_back({worker, "i" + std::to_string(offset + i), i < correct0 ? 0 : 1, 0});
    out.push_back({worker, "j" + std::to_string(offset + i), i < correct1 ? 1 : 0, 1});
  }
  return out;
}
}  // namespace

TEST_CASE("ingest computes frequencies, prior and P1 prices") {
  std::vector<ResponseRecord> records;
  for (auto [w, c0, c1] : {std::tuple{"w1", 9, 8}, std::tuple{"w2", 7, 9}, std::tuple{"w3", 6, 6}}) {
    auto r = worker_records(w, 10, c0, c1);
    records.insert(records.end(), r.begin(), r.end());
  }
  const IngestResult res = ingest_responses(records, {});
  REQUIRE(res.classes.size() == 3);
  CHECK(res.classes[0].confusion.c0() == doctest::Approx(0.9));
  CHECK(res.classes[0].confusion.c1() == doctest::Approx(0.8));
  CHECK(res.classes[0].price == Money::from_units(p1_price(res.classes[0].confusion)));
  CHECK(res.prior.w0() == doctest::Approx(0.5));
  CHECK(res.warnings.empty());
  CHECK(res.to_instance("x").size() == 3);
}

TEST_CASE("ingest with a class map and explicit prices") {
  auto records = worker_records("w1", 10, 9, 9);
  auto more = worker_records("w2", 10, 7, 7);
  records.insert(records.end(), more.begin(), more.end());
  IngestOptions opts;
  opts.explicit_prices["A"] = 4.5;
  const auto res = ingest_responses(records, {{"w1", "A"}, {"w2", "A"}}, opts);
  REQUIRE(res.classes.size() == 1);
  CHECK(res.classes[0].confusion.c0() == doctest::Approx(0.8));
  CHECK(res.classes[0].price == Money::from_units(4.5));
}

TEST_CASE("ingest clamps perfect accuracy with a warning") {
  const auto res = ingest_responses(worker_records("w", 5, 5, 4), {});
  CHECK(res.classes[0].confusion.c0() == doctest::Approx(0.995));
  CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("ingest errors") {
  CHECK_THROWS_AS(ingest_responses({}, {}), ConfigError);
  std::vector<ResponseRecord> only_zero{{"w", "a", 0, 0}, {"w", "b", 0, 0}};
  CHECK_THROWS_WITH_AS(ingest_responses(only_zero, {}), doctest::Contains("gold label 1"), ConfigError);
  std::vector<ResponseRecord> no_gold{{"w", "a", 0, std::nullopt}};
  CHECK_THROWS_AS(ingest_responses(no_gold, {}), ConfigError);
  auto recs = worker_records("w", 3, 2, 2);
  CHECK_THROWS_AS(ingest_responses(recs, {{"other", "A"}}), ConfigError);
}

TEST_CASE("responses CSV parsing") {
  std::istringstream ok("worker_id,item_id,label,gold\nw1,i1,1,1\nw1,i2,0,1\n");
  const auto recs = read_responses_csv(ok);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].label == 0);
  CHECK(*recs[1].gold == 1);
  std::istringstream bad_header("worker,item,label,gold\n");
  CHECK_THROWS_AS(read_responses_csv(bad_header), ConfigError);
  std::istringstream bad_label("worker_id,item_id,label,gold\nw1,i1,2,1\n");
  CHECK_THROWS_WITH_AS(read_responses_csv(bad_label, "f.csv"), doctest::Contains("f.csv:2"), ConfigError);
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

TEST_CASE("bundled instances") {
  const Instance asym = bundled_p1_asym();
  REQUIRE(asym.size() == 5);
  const double diag[5][2] = {{0.94, 0.90}, {0.77, 0.87}, {0.92, 0.76}, {0.88, 0.88}, {0.64, 0.66}};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(asym[k].confusion == ConfusionMatrix(diag[k][0], diag[k][1]));
    CHECK(asym[k].price == Money::from_units(p1_price(asym[k].confusion)));
  }
  const Instance sym = bundled_p1_sym();
  const double avg[5] = {0.92, 0.82, 0.84, 0.88, 0.65};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(sym[k].confusion.c0() == doctest::Approx(avg[k]).epsilon(1e-12));
    CHECK(sym[k].confusion.is_symmetric());
  }
}

TEST_CASE("instance JSON round trip and validation") {
  const Instance asym = bundled_p1_asym();
  const Instance back = instance_from_json(instance_to_json(asym), "<rt>", "P1-Asym");
  REQUIRE(back.size() == asym.size());
  for (std::size_t k = 0; k < asym.size(); ++k) {
    CHECK(back[k].price == asym[k].price);
    CHECK(back[k].confusion.c0() == doctest::Approx(asym[k].confusion.c0()).epsilon(1e-15));
  }

  auto doc = instance_to_json(asym);
  doc["classes"][0]["confusion"][0][0] = 0.5;  // column no longer sums to 1
  CHECK_THROWS_AS(instance_from_json(doc), ConfigError);

  auto p1 = instance_to_json(asym);
  p1["pricing"] = "P1";
  p1["classes"][0]["price"] = 1000.0;
  CHECK(instance_from_json(p1)[0].price == asym[0].price);

  auto bad = instance_to_json(asym);
  bad["pricing"] = "auction";
  CHECK_THROWS_AS(instance_from_json(bad), ConfigError);
  CHECK_THROWS_AS(load_instance("/nonexistent/instance.json"), ConfigError);
}

TEST_CASE("shipped data files match the bundled instances") {
  const Instance asym = load_instance(std::string(CROWD_DATA_DIR) + "/p1_asym.json");
  const Instance sym = load_instance(std::string(CROWD_DATA_DIR) + "/p1_sym.json");
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(asym[k].price == bundled_p1_asym()[k].price);
    CHECK(sym[k].price == bundled_p1_sym()[k].price);
    CHECK(sym[k].confusion.c0() == doctest::Approx(bundled_p1_sym()[k].confusion.c0()).epsilon(1e-12));
  }
}
