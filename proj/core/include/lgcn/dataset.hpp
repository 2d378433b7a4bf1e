#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lgcn {

// Identifier as it appears in an interaction file.
using RawId = std::int64_t;
// Dense identifier: users in [0, M), items in [0, N), graph nodes in [0, M+N).
using Index = std::uint32_t;

using ItemLists = std::vector<std::vector<Index>>;

struct UserInteractions {
  RawId user = 0;
  std::vector<RawId> items;  // sorted, unique
};

// Parsed contents of one interaction file. Users keep the order in which
// they first appear; repeated user lines are merged.
struct InteractionFile {
  std::vector<UserInteractions> users;
  std::vector<std::string> warnings;

  std::size_t num_interactions() const;
};

InteractionFile parse_interactions(std::istream& in, std::string_view source_name);
InteractionFile parse_interaction_file(const std::filesystem::path& path);

// Writes one line per user (line index = dense user id).
void write_interactions(std::ostream& out, const ItemLists& lists);
void write_interaction_file(const std::filesystem::path& path, const ItemLists& lists);

// Dense id -> original id, for users and items.
struct IdMap {
  std::vector<RawId> users;
  std::vector<RawId> items;
};

// {"users": [[original, dense], ...], "items": [[original, dense], ...]}
void write_id_map(const std::filesystem::path& path, const IdMap& map);
IdMap read_id_map(const std::filesystem::path& path);

struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  ItemLists train;
  ItemLists validation;
  ItemLists test;
  std::size_t num_train_interactions = 0;
  IdMap ids;

  std::size_t num_validation_interactions() const;
  std::size_t num_test_interactions() const;

  // Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

struct SplitReport {
  std::size_t dropped_test_users = 0;      // users absent from the train file
  std::size_t dropped_test_entries = 0;    // entries of dropped users plus cold-start items
  std::size_t dropped_cold_items = 0;      // distinct items seen only in test
  std::size_t dropped_train_overlap = 0;   // test entries that were also train entries
  std::size_t moved_to_validation = 0;
  std::vector<std::string> warnings;
};

struct BuildResult {
  InteractionDataset dataset;
  SplitReport report;
};

// Remaps ids densely in first-seen train order, drops cold-start test
// entries, and moves ceil(fraction * |train_u|) items of every user with at
// least two train items into validation (never emptying train_u).
BuildResult build_dataset(const InteractionFile& train, const InteractionFile& test,
                          double validation_fraction, std::uint64_t seed);

// Reads `train.txt` and `test.txt` from a directory and builds the dataset.
BuildResult load_dataset(const std::filesystem::path& dir, double validation_fraction,
                         std::uint64_t seed);

// All observed interactions divided by M * N.
double density(const InteractionDataset& ds);

}  // namespace lgcn
