#include "diststn/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "diststn/errors.hpp"
#include "json.hpp"

namespace diststn {

namespace {

bool same_angle(double a, double b) { return std::abs(a - b) < 1e-3; }

std::size_t fraction_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

std::string to_string(Arc arc) { return arc == Arc::kFirstHalf ? "first_half" : "second_half"; }

Arc parse_arc(const std::string& text) {
  if (text == "first_half") return Arc::kFirstHalf;
  if (text == "second_half") return Arc::kSecondHalf;
  throw InvalidArgument("arc must be first_half or second_half, got '" + text + "'");
}

bool in_arc(double aspect_deg, Arc arc) {
  const double a = normalize_degrees(aspect_deg);
  return arc == Arc::kFirstHalf ? a < 180.0 : a >= 180.0;
}

PaaSplit build_paa_split(std::span<const TargetChip> chips, const SplitOptions& o) {
  if (!(o.coop_fraction > 0.0 && o.coop_fraction <= 1.0)) throw InvalidArgument("coop_fraction must be in (0, 1]");
  if (!(o.val_fraction >= 0.0 && o.val_fraction < 1.0)) throw InvalidArgument("val_fraction must be in [0, 1)");

  std::map<std::uint32_t, std::vector<std::size_t>> pool;  // class -> training-depression chips
  std::set<std::uint32_t> classes;
  for (std::size_t i = 0; i < chips.size(); ++i) {
    classes.insert(chips[i].class_id);
    if (same_angle(chips[i].depression_deg, o.train_depression_deg)) pool[chips[i].class_id].push_back(i);
  }
  for (std::uint32_t c : o.noncoop_classes) {
    if (!classes.count(c)) throw InvalidArgument("non-cooperative class " + std::to_string(c) + " not in dataset");
  }

  PaaSplit split;
  split.noncoop_classes = o.noncoop_classes;
  split.noncoop_arc = o.arc;
  std::mt19937_64 rng(o.seed);
  std::vector<bool> used(chips.size(), false);
  for (std::uint32_t c : classes) {
    std::vector<std::size_t> members;
    const bool noncoop = o.noncoop_classes.count(c) > 0;
    for (std::size_t i : pool[c]) {
      if (!noncoop || in_arc(chips[i].aspect_deg, o.arc)) members.push_back(i);
    }
    if (members.empty()) {
      throw EmptyClass("class " + std::to_string(c) + " has no training chips" +
                       (noncoop ? " in arc " + to_string(o.arc) : std::string()));
    }
    std::shuffle(members.begin(), members.end(), rng);
    if (!noncoop) members.resize(std::max<std::size_t>(1, fraction_count(members.size(), o.coop_fraction)));

    std::size_t n_val = fraction_count(members.size(), o.val_fraction);
    if (o.val_fraction > 0.0 && n_val == 0 && members.size() >= 2) n_val = 1;
    if (n_val >= members.size()) n_val = members.size() - 1;
    for (std::size_t k = 0; k < members.size(); ++k) {
      (k < n_val ? split.validation : split.train).push_back(members[k]);
      used[members[k]] = true;
    }
  }
  for (std::size_t i = 0; i < chips.size(); ++i) {
    if (!used[i] && same_angle(chips[i].depression_deg, o.test_depression_deg)) split.test.push_back(i);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

std::set<std::uint32_t> choose_noncoop_classes(std::size_t num_classes, std::size_t count, std::uint64_t seed) {
  if (count > num_classes) {
    throw InvalidArgument("cannot choose " + std::to_string(count) + " non-cooperative classes out of " +
                          std::to_string(num_classes));
  }
  std::vector<std::uint32_t> ids(num_classes);
  std::iota(ids.begin(), ids.end(), 0u);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::string> validate_split(const PaaSplit& split, std::span<const TargetChip> chips) {
  std::vector<std::string> problems;
  auto check_index = [&](std::size_t i) {
    if (i >= chips.size()) problems.push_back("index " + std::to_string(i) + " out of range");
    return i < chips.size();
  };
  std::set<std::size_t> train_side;
  for (const auto* part : {&split.train, &split.validation}) {
    for (std::size_t i : *part) {
      if (!check_index(i)) continue;
      train_side.insert(i);
      const TargetChip& c = chips[i];
      if (split.noncoop_classes.count(c.class_id) && !in_arc(c.aspect_deg, split.noncoop_arc)) {
        problems.push_back("non-cooperative chip " + std::to_string(i) + " (class " + std::to_string(c.class_id) +
                           ", aspect " + std::to_string(c.aspect_deg) + ") outside arc " +
                           to_string(split.noncoop_arc));
      }
    }
  }
  for (std::size_t i : split.test) {
    if (!check_index(i)) continue;
    if (train_side.count(i)) problems.push_back("chip " + std::to_string(i) + " is in both train and test");
  }
  return problems;
}

void write_split_manifest(const PaaSplit& split, const Dataset& dataset, const std::filesystem::path& dataset_dir,
                          const std::filesystem::path& path) {
  using nlohmann::json;
  auto paths = [&](const std::vector<std::size_t>& idx) {
    json arr = json::array();
    for (std::size_t i : idx) arr.push_back(dataset.records.at(i).path);
    return arr;
  };
  const auto base = std::filesystem::absolute(path).parent_path();
  json j;
  j["format"] = "diststn-split";
  j["version"] = 1;
  j["dataset"] = std::filesystem::relative(std::filesystem::absolute(dataset_dir), base).generic_string();
  j["noncoop_classes"] = std::vector<std::uint32_t>(split.noncoop_classes.begin(), split.noncoop_classes.end());
  j["arc"] = to_string(split.noncoop_arc);
  j["train"] = paths(split.train);
  j["validation"] = paths(split.validation);
  j["test"] = paths(split.test);
  const std::string text = j.dump(1) + "\n";
  detail::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

LoadedSplit read_split_manifest(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
  try {
    if (j.at("format").get<std::string>() != "diststn-split") throw FormatError(path.string() + ": not a split", 0);
    LoadedSplit out;
    out.dataset_dir = std::filesystem::absolute(path).parent_path() / j.at("dataset").get<std::string>();
    out.dataset = read_dataset(out.dataset_dir);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.dataset.records.size(); ++i) index[out.dataset.records[i].path] = i;
    auto lookup = [&](const json& arr) {
      std::vector<std::size_t> idx;
      for (const auto& p : arr) {
        auto it = index.find(p.get<std::string>());
        if (it == index.end()) throw FormatError(path.string() + ": unknown chip " + p.get<std::string>(), 0);
        idx.push_back(it->second);
      }
      return idx;
    };
    out.split.train = lookup(j.at("train"));
    out.split.validation = lookup(j.at("validation"));
    out.split.test = lookup(j.at("test"));
    for (auto c : j.at("noncoop_classes")) out.split.noncoop_classes.insert(c.get<std::uint32_t>());
    out.split.noncoop_arc = parse_arc(j.at("arc").get<std::string>());
    return out;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
}

}  // namespace diststn
