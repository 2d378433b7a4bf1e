#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "lgcn/dataset.hpp"
#include "lgcn/error.hpp"
#include "lgcn/synthetic.hpp"

using namespace lgcn;

namespace {

InteractionFile parse(const std::string& text) {
  std::istringstream in(text);
  return parse_interactions(in, "mem");
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lgcn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse a simple line") {
  auto f = parse("0 1 2 3\n");
  REQUIRE(f.users.size() == 1);
  CHECK(f.users[0].user == 0);
  CHECK(f.users[0].items == std::vector<RawId>{1, 2, 3});
  CHECK(f.warnings.empty());
}

TEST_CASE("user without items yields a warning") {
  auto f = parse("5\n");
  REQUIRE(f.users.size() == 1);
  CHECK(f.users[0].user == 5);
  CHECK(f.users[0].items.empty());
  CHECK(f.warnings.size() == 1);
}

TEST_CASE("duplicates merge and items sort") {
  auto f = parse("3 9 1 9\n7 2\n3 4\n");
  REQUIRE(f.users.size() == 2);
  CHECK(f.users[0].user == 3);
  CHECK(f.users[0].items == std::vector<RawId>{1, 4, 9});
  CHECK(f.users[1].user == 7);
  CHECK(f.num_interactions() == 4);
}

TEST_CASE("malformed tokens report their line") {
  for (const std::string bad : {"0 1\n1 x\n", "0 1\n\n1 -3\n", "0 1.5\n"}) {
    try {
      parse(bad);
      FAIL("expected ParseError for " << bad);
    } catch (const ParseError& e) {
      if (bad == "0 1\n1 x\n") CHECK(e.line() == 2);
      if (bad == "0 1\n\n1 -3\n") CHECK(e.line() == 3);
      if (bad == "0 1.5\n") CHECK(e.line() == 1);
    }
  }
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(parse_interaction_file("/nonexistent/lgcn/train.txt"), IoError);
}

TEST_CASE("write then parse round-trips random item lists") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    ItemLists lists(1 + gen() % 12);
    for (auto& l : lists) {
      for (Index i = 0; i < 40; ++i)
        if (gen() % 4 == 0) l.push_back(i);
      if (l.empty()) l.push_back(static_cast<Index>(gen() % 40));
    }
    std::stringstream io;
    write_interactions(io, lists);
    auto f = parse_interactions(io, "roundtrip");
    REQUIRE(f.users.size() == lists.size());
    for (std::size_t u = 0; u < lists.size(); ++u) {
      CHECK(f.users[u].user == static_cast<RawId>(u));
      REQUIRE(f.users[u].items.size() == lists[u].size());
      for (std::size_t k = 0; k < lists[u].size(); ++k)
        CHECK(f.users[u].items[k] == static_cast<RawId>(lists[u][k]));
    }
  }
}

TEST_CASE("dense remap follows first-seen order") {
  auto train = parse("10 7 3\n4 3 8\n");
  auto test = parse("4 7\n10 8\n");
  auto built = build_dataset(train, test, 0.0, 1);
  const auto& ds = built.dataset;
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 3);
  CHECK(ds.ids.users == std::vector<RawId>{10, 4});
  // User 10's items are sorted before remapping, so 3 precedes 7.
  CHECK(ds.ids.items == std::vector<RawId>{3, 7, 8});
  CHECK(ds.train[0] == std::vector<Index>{0, 1});
  CHECK(ds.train[1] == std::vector<Index>{0, 2});
  CHECK(ds.test[0] == std::vector<Index>{2});
  CHECK(ds.test[1] == std::vector<Index>{1});
  CHECK(ds.num_train_interactions == 4);
}

TEST_CASE("cold-start and overlapping test entries are dropped") {
  auto train = parse("0 1 2\n1 2\n");
  auto test = parse("0 2 3\n1 1\n9 1\n");
  auto built = build_dataset(train, test, 0.0, 1);
  const auto& r = built.report;
  CHECK(r.dropped_test_users == 1);
  CHECK(r.dropped_cold_items == 1);
  CHECK(r.dropped_train_overlap == 1);
  CHECK(built.dataset.test[0].empty());
  CHECK(built.dataset.test[1] == std::vector<Index>{0});
  CHECK(built.dataset.num_test_interactions() == 1);
}

TEST_CASE("validation fraction zero leaves train untouched") {
  auto train = parse("0 1 2 3\n1 2 3\n");
  auto built = build_dataset(train, parse(""), 0.0, 5);
  for (const auto& v : built.dataset.validation) CHECK(v.empty());
  CHECK(built.dataset.num_train_interactions == 5);
}

TEST_CASE("ten items at fraction 0.1 move exactly one") {
  auto built = build_dataset(parse("0 1 2 3 4 5 6 7 8 9 10\n"), parse(""), 0.1, 42);
  CHECK(built.dataset.validation[0].size() == 1);
  CHECK(built.dataset.train[0].size() == 9);
  CHECK(built.report.moved_to_validation == 1);
}

TEST_CASE("three users with two items at fraction 0.5") {
  auto built = build_dataset(parse("0 1 2\n1 3 4\n2 5 6\n"), parse(""), 0.5, 3);
  const auto& ds = built.dataset;
  CHECK(ds.num_train_interactions == 3);
  for (std::size_t u = 0; u < 3; ++u) {
    CHECK(ds.validation[u].size() == 1);
    CHECK(ds.train[u].size() == 1);
    // Enumerate: the union is the user's original pair.
    std::vector<Index> all = ds.train[u];
    all.push_back(ds.validation[u][0]);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<Index>{static_cast<Index>(2 * u), static_cast<Index>(2 * u + 1)});
  }
}

TEST_CASE("single-item users are never emptied") {
  auto built = build_dataset(parse("0 1\n1 2 3\n"), parse(""), 0.99, 3);
  CHECK(built.dataset.train[0].size() == 1);
  CHECK(built.dataset.validation[0].empty());
  CHECK(built.dataset.train[1].size() == 1);
  CHECK(built.dataset.validation[1].size() == 1);
}

TEST_CASE("split is deterministic per seed and disjoint") {
  BlockDatasetConfig cfg;
  cfg.users = 30;
  cfg.items = 40;
  cfg.clusters = 2;
  auto block = make_block_dataset(cfg);
  auto a = build_dataset(block.train, block.test, 0.2, 99).dataset;
  auto b = build_dataset(block.train, block.test, 0.2, 99).dataset;
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK_NOTHROW(a.validate());
  for (std::size_t u = 0; u < a.num_users; ++u) {
    for (Index i : a.validation[u])
      CHECK_FALSE(std::binary_search(a.train[u].begin(), a.train[u].end(), i));
  }
}

TEST_CASE("density") {
  InteractionDataset one;
  one.num_users = 1;
  one.num_items = 1;
  one.train = {{0}};
  one.validation = {{}};
  one.test = {{}};
  one.num_train_interactions = 1;
  CHECK(density(one) == 1.0);

  InteractionDataset two;
  two.num_users = 2;
  two.num_items = 2;
  two.train = {{0}, {}};
  two.validation = {{}, {}};
  two.test = {{}, {1}};
  two.num_train_interactions = 1;
  CHECK(density(two) == 0.5);

  InteractionDataset empty;
  CHECK_THROWS_AS(density(empty), InvalidArgument);
}

TEST_CASE("id map round-trips through json") {
  auto dir = scratch_dir("idmap");
  IdMap map{{10, 4, 77}, {3, 7, 8, 1000000000000}};
  write_id_map(dir / "mapping.json", map);
  auto back = read_id_map(dir / "mapping.json");
  CHECK(back.users == map.users);
  CHECK(back.items == map.items);
}

TEST_CASE("load_dataset reads a directory") {
  auto dir = scratch_dir("load");
  write_interaction_file(dir / "train.txt", ItemLists{{0, 1}, {1, 2}});
  write_interaction_file(dir / "test.txt", ItemLists{{2}, {0}});
  auto ds = load_dataset(dir, 0.0, 1).dataset;
  CHECK(ds.num_users == 2);
  CHECK(ds.num_items == 3);
  CHECK(ds.num_test_interactions() == 2);
}

TEST_CASE("full-scale statistics when the data is present" * doctest::skip(std::getenv("LGCN_GOWALLA_DIR") == nullptr)) {
  auto ds = load_dataset(std::getenv("LGCN_GOWALLA_DIR"), 0.0, 2020).dataset;
  CHECK(ds.num_users == 29858);
  CHECK(ds.num_items == 40981);
  CHECK(ds.num_train_interactions + ds.num_test_interactions() == 1027370);
  CHECK(density(ds) == doctest::Approx(0.00084).epsilon(0.01));
}
