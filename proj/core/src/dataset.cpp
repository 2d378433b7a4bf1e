#include "lgcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lgcn/error.hpp"
#include "lgcn/rng.hpp"

namespace lgcn {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::size_t total_size(const ItemLists& lists) {
  std::size_t n = 0;
  for (const auto& l : lists) n += l.size();
  return n;
}

bool sorted_unique(const std::vector<Index>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

bool disjoint(const std::vector<Index>& a, const std::vector<Index>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return false;
    if (*i < *j) ++i; else ++j;
  }
  return true;
}

}  // namespace

std::size_t InteractionFile::num_interactions() const {
  std::size_t n = 0;
  for (const auto& u : users) n += u.items.size();
  return n;
}

InteractionFile parse_interactions(std::istream& in, std::string_view source_name) {
  const std::string source(source_name);
  InteractionFile out;
  std::unordered_map<RawId, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<RawId> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && is_space(line[pos])) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !is_space(line[end])) ++end;
      RawId value = 0;
      const char* first = line.data() + pos;
      const char* last = line.data() + end;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last || value < 0) {
        throw ParseError(source, line_no,
                         "malformed token '" + line.substr(pos, end - pos) + "'");
      }
      tokens.push_back(value);
      pos = end;
    }
    if (tokens.empty()) continue;

    const RawId user = tokens.front();
    auto [it, inserted] = slot.try_emplace(user, out.users.size());
    if (inserted) out.users.push_back({user, {}});
    auto& items = out.users[it->second].items;
    if (tokens.size() == 1) {
      out.warnings.push_back(source + ":" + std::to_string(line_no) + ": user " +
                             std::to_string(user) + " has no items");
    }
    items.insert(items.end(), tokens.begin() + 1, tokens.end());
  }
  if (in.bad()) throw IoError("read failure in " + source);

  for (auto& u : out.users) {
    std::sort(u.items.begin(), u.items.end());
    u.items.erase(std::unique(u.items.begin(), u.items.end()), u.items.end());
  }
  return out;
}

InteractionFile parse_interaction_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_interactions(in, path.string());
}

void write_interactions(std::ostream& out, const ItemLists& lists) {
  for (std::size_t u = 0; u < lists.size(); ++u) {
    out << u;
    for (Index i : lists[u]) out << ' ' << i;
    out << '\n';
  }
}

void write_interaction_file(const std::filesystem::path& path, const ItemLists& lists) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_interactions(out, lists);
  if (!out) throw IoError("write failure on " + path.string());
}

void write_id_map(const std::filesystem::path& path, const IdMap& map) {
  nlohmann::json j;
  j["users"] = nlohmann::json::array();
  j["items"] = nlohmann::json::array();
  for (std::size_t d = 0; d < map.users.size(); ++d) j["users"].push_back({map.users[d], d});
  for (std::size_t d = 0; d < map.items.size(); ++d) j["items"].push_back({map.items[d], d});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

IdMap read_id_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  auto load = [&](const char* key) {
    std::vector<RawId> dense_to_raw;
    const auto& pairs = j.at(key);
    dense_to_raw.assign(pairs.size(), -1);
    for (const auto& p : pairs) {
      const auto dense = p.at(1).get<std::size_t>();
      if (dense >= dense_to_raw.size()) {
        throw ParseError(path.string(), 0, std::string("dense id out of range in ") + key);
      }
      dense_to_raw[dense] = p.at(0).get<RawId>();
    }
    return dense_to_raw;
  };
  return {load("users"), load("items")};
}

std::size_t InteractionDataset::num_validation_interactions() const {
  return total_size(validation);
}

std::size_t InteractionDataset::num_test_interactions() const { return total_size(test); }

void InteractionDataset::validate() const {
  if (train.size() != num_users || validation.size() != num_users || test.size() != num_users) {
    throw InvalidArgument("per-user lists must have num_users entries");
  }
  for (std::size_t u = 0; u < num_users; ++u) {
    for (const ItemLists* lists : {&train, &validation, &test}) {
      const auto& l = (*lists)[u];
      if (!sorted_unique(l)) {
        throw InvalidArgument("user " + std::to_string(u) + ": list not sorted/unique");
      }
      if (!l.empty() && l.back() >= num_items) {
        throw InvalidArgument("user " + std::to_string(u) + ": item id out of range");
      }
    }
    if (!disjoint(train[u], test[u]) || !disjoint(train[u], validation[u]) ||
        !disjoint(validation[u], test[u])) {
      throw InvalidArgument("user " + std::to_string(u) + ": splits overlap");
    }
  }
  if (total_size(train) != num_train_interactions) {
    throw InvalidArgument("num_train_interactions does not match train lists");
  }
}

BuildResult build_dataset(const InteractionFile& train, const InteractionFile& test,
                          double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation_fraction must lie in [0, 1)");
  }
  if (train.num_interactions() == 0) throw InvalidArgument("empty train set");

  BuildResult result;
  auto& ds = result.dataset;
  auto& report = result.report;

  std::unordered_map<RawId, Index> user_ids;
  std::unordered_map<RawId, Index> item_ids;
  for (const auto& u : train.users) {
    user_ids.emplace(u.user, static_cast<Index>(ds.ids.users.size()));
    ds.ids.users.push_back(u.user);
    for (RawId i : u.items) {
      if (item_ids.emplace(i, static_cast<Index>(ds.ids.items.size())).second) {
        ds.ids.items.push_back(i);
      }
    }
  }
  ds.num_users = ds.ids.users.size();
  ds.num_items = ds.ids.items.size();
  ds.train.assign(ds.num_users, {});
  ds.validation.assign(ds.num_users, {});
  ds.test.assign(ds.num_users, {});

  for (const auto& u : train.users) {
    auto& dst = ds.train[user_ids.at(u.user)];
    for (RawId i : u.items) dst.push_back(item_ids.at(i));
    std::sort(dst.begin(), dst.end());
  }

  std::vector<RawId> cold_items;
  for (const auto& u : test.users) {
    auto uit = user_ids.find(u.user);
    if (uit == user_ids.end()) {
      ++report.dropped_test_users;
      report.dropped_test_entries += u.items.size();
      report.warnings.push_back("test user " + std::to_string(u.user) +
                                " not in train; dropped " + std::to_string(u.items.size()) +
                                " entries");
      continue;
    }
    auto& dst = ds.test[uit->second];
    const auto& known = ds.train[uit->second];
    for (RawId i : u.items) {
      auto iit = item_ids.find(i);
      if (iit == item_ids.end()) {
        ++report.dropped_test_entries;
        cold_items.push_back(i);
        continue;
      }
      if (std::binary_search(known.begin(), known.end(), iit->second)) {
        ++report.dropped_train_overlap;
        continue;
      }
      dst.push_back(iit->second);
    }
    std::sort(dst.begin(), dst.end());
  }
  std::sort(cold_items.begin(), cold_items.end());
  report.dropped_cold_items =
      static_cast<std::size_t>(std::unique(cold_items.begin(), cold_items.end()) - cold_items.begin());
  if (report.dropped_cold_items > 0) {
    report.warnings.push_back("dropped " + std::to_string(report.dropped_cold_items) +
                              " cold-start test items");
  }
  if (report.dropped_train_overlap > 0) {
    report.warnings.push_back("dropped " + std::to_string(report.dropped_train_overlap) +
                              " test entries already present in train");
  }

  if (validation_fraction > 0.0) {
    Rng rng(derive_seed(seed, 0x5011));
    for (std::size_t u = 0; u < ds.num_users; ++u) {
      auto& items = ds.train[u];
      const std::size_t n = items.size();
      if (n < 2) continue;
      // The small offset keeps products such as 0.7 * 10 from rounding up.
      auto take = static_cast<std::size_t>(
          std::ceil(validation_fraction * static_cast<double>(n) - 1e-9));
      take = std::min(take, n - 1);
      if (take == 0) continue;
      // Partial Fisher-Yates: the first `take` positions become validation.
      std::vector<Index> shuffled = items;
      for (std::size_t k = 0; k < take; ++k) {
        const std::size_t pick = k + rng.uniform_index(n - k);
        std::swap(shuffled[k], shuffled[pick]);
      }
      auto& val = ds.validation[u];
      val.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(take));
      items.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(take), shuffled.end());
      std::sort(val.begin(), val.end());
      std::sort(items.begin(), items.end());
      report.moved_to_validation += take;
    }
  }

  ds.num_train_interactions = total_size(ds.train);
  ds.validate();
  return result;
}

BuildResult load_dataset(const std::filesystem::path& dir, double validation_fraction,
                         std::uint64_t seed) {
  const auto train = parse_interaction_file(dir / "train.txt");
  const auto test = parse_interaction_file(dir / "test.txt");
  auto result = build_dataset(train, test, validation_fraction, seed);
  auto& w = result.report.warnings;
  w.insert(w.begin(), test.warnings.begin(), test.warnings.end());
  w.insert(w.begin(), train.warnings.begin(), train.warnings.end());
  return result;
}

double density(const InteractionDataset& ds) {
  if (ds.num_users == 0 || ds.num_items == 0) {
    throw InvalidArgument("density requires a nonempty user and item space");
  }
  const auto total = ds.num_train_interactions + ds.num_validation_interactions() +
                     ds.num_test_interactions();
  return static_cast<double>(total) /
         (static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items));
}

}  // namespace lgcn
