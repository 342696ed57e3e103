#include "mcgraph/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mcgraph/error.hpp"
#include "mcgraph/random.hpp"

namespace mcgraph {

std::size_t IndexMap::intern(const std::string& id) {
  auto [it, inserted] = index_.try_emplace(id, ids_.size());
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::size_t IndexMap::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown id '" + id + "'");
  return it->second;
}

RatingDataset RatingDataset::from_records(std::vector<RatingRecord> records,
                                          std::vector<std::string> criteria_names) {
  if (criteria_names.empty() && !records.empty()) {
    for (std::size_t c = 0; c < records.front().criteria.size(); ++c)
      criteria_names.push_back("c" + std::to_string(c + 1));
  }
  auto users = std::make_shared<IndexMap>();
  auto items = std::make_shared<IndexMap>();
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;

  RatingDataset out;
  out.criteria_names_ = std::move(criteria_names);
  out.records_.reserve(records.size());
  for (auto& r : records) {
    if (r.criteria.size() != out.criteria_names_.size()) {
      throw DataError("record (" + r.user_id + "," + r.item_id + ") has " +
                      std::to_string(r.criteria.size()) + " criteria, expected " +
                      std::to_string(out.criteria_names_.size()));
    }
    r.user = users->intern(r.user_id);
    r.item = items->intern(r.item_id);
    auto [it, inserted] = position.try_emplace({r.user, r.item}, out.records_.size());
    if (inserted) {
      out.records_.push_back(std::move(r));
    } else {
      out.records_[it->second] = std::move(r);
    }
  }
  out.users_ = std::move(users);
  out.items_ = std::move(items);
  return out;
}

RatingDataset RatingDataset::with_records(std::vector<RatingRecord> records) const {
  RatingDataset out;
  out.users_ = users_;
  out.items_ = items_;
  out.criteria_names_ = criteria_names_;
  out.records_ = std::move(records);
  return out;
}

RatingDataset RatingDataset::with_criteria_prefix(std::size_t count) const {
  if (count == 0 || count > num_criteria())
    throw ConfigError("criteria count " + std::to_string(count) + " outside 1.." +
                      std::to_string(num_criteria()));
  RatingDataset out = *this;
  out.criteria_names_.resize(count);
  for (auto& r : out.records_) r.criteria.resize(count);
  return out;
}

bool RatingDataset::operator==(const RatingDataset& other) const {
  auto same_map = [](const auto& a, const auto& b) {
    if (!a || !b) return !a && !b;
    return *a == *b;
  };
  return same_map(users_, other.users_) && same_map(items_, other.items_) &&
         criteria_names_ == other.criteria_names_ && records_ == other.records_;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
  }
  return fields;
}

double parse_rating(std::string_view field, std::size_t line, const char* column) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || end != field.data() + field.size()) {
    throw ParseError(line, std::string("non-numeric ") + column + " rating '" +
                               std::string(field) + "'");
  }
  return value;
}

}  // namespace

RatingDataset load_ratings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::string> criteria_names;
  std::vector<RatingRecord> records;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (!have_header) {
      if (view.front() == '#') continue;
      auto fields = split_fields(view);
      if (fields.size() < 4 || fields[0] != "user_id" || fields[1] != "item_id" ||
          fields[2] != "overall") {
        throw ParseError(line_no, "header must be user_id,item_id,overall,c1,...,cC");
      }
      for (std::size_t i = 3; i < fields.size(); ++i) criteria_names.emplace_back(fields[i]);
      have_header = true;
      continue;
    }
    auto fields = split_fields(view);
    if (fields.size() != criteria_names.size() + 3) {
      throw ParseError(line_no, "expected " + std::to_string(criteria_names.size() + 3) +
                                    " columns, found " + std::to_string(fields.size()));
    }
    RatingRecord r;
    r.user_id = std::string(fields[0]);
    r.item_id = std::string(fields[1]);
    if (r.user_id.empty() || r.item_id.empty()) throw ParseError(line_no, "empty id");
    r.overall = parse_rating(fields[2], line_no, "overall");
    r.criteria.reserve(criteria_names.size());
    for (std::size_t c = 0; c < criteria_names.size(); ++c)
      r.criteria.push_back(parse_rating(fields[3 + c], line_no, "criterion"));
    records.push_back(std::move(r));
  }
  if (!have_header) throw EmptyDatasetError("empty ratings file");
  if (records.empty()) throw EmptyDatasetError("ratings file has a header but no records");
  return RatingDataset::from_records(std::move(records), std::move(criteria_names));
}

RatingDataset load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return load_ratings(in);
}

void write_ratings(std::ostream& out, const RatingDataset& dataset) {
  out << "user_id,item_id,overall";
  for (const auto& name : dataset.criteria_names()) out << ',' << name;
  out << '\n' << std::setprecision(17);
  for (const auto& r : dataset.records()) {
    out << r.user_id << ',' << r.item_id << ',' << r.overall;
    for (double v : r.criteria) out << ',' << v;
    out << '\n';
  }
}

void write_ratings(const std::filesystem::path& path, const RatingDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_ratings(out, dataset);
}

RatingDataset normalize_scale(const RatingDataset& dataset, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("source range requires hi > lo");
  auto map = [&](double v, const RatingRecord& r) {
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "rating " << v << " of (" << r.user_id << "," << r.item_id << ") outside [" << lo
          << "," << hi << "]";
      throw DataError(msg.str());
    }
    return 1.0 + 4.0 * (v - lo) / (hi - lo);
  };
  std::vector<RatingRecord> records = dataset.records();
  for (auto& r : records) {
    r.overall = map(r.overall, r);
    for (double& v : r.criteria) v = map(v, r);
  }
  return dataset.with_records(std::move(records));
}

DatasetStats compute_stats(const RatingDataset& dataset) {
  if (dataset.num_users() == 0 || dataset.num_items() == 0)
    throw EmptyDatasetError("statistics need at least one user and one item");
  const double n = static_cast<double>(dataset.size());
  DatasetStats s;
  s.avg_reviews_per_user = n / static_cast<double>(dataset.num_users());
  s.avg_reviews_per_item = n / static_cast<double>(dataset.num_items());
  s.sparsity = 1.0 - n / (static_cast<double>(dataset.num_users()) *
                          static_cast<double>(dataset.num_items()));
  s.num_criteria = dataset.num_criteria();

  double count = 0.0, mean = 0.0, m2 = 0.0;  // Welford
  for (const auto& r : dataset.records()) {
    for (double v : r.criteria) {
      count += 1.0;
      double delta = v - mean;
      mean += delta / count;
      m2 += delta * (v - mean);
    }
  }
  s.variance_criteria_ratings = count > 0.0 ? m2 / count : 0.0;
  return s;
}

std::string stats_to_json(const DatasetStats& stats) {
  nlohmann::ordered_json j;
  j["avg_reviews_per_user"] = stats.avg_reviews_per_user;
  j["avg_reviews_per_item"] = stats.avg_reviews_per_item;
  j["sparsity"] = stats.sparsity;
  j["num_criteria"] = stats.num_criteria;
  j["variance_criteria_ratings"] = stats.variance_criteria_ratings;
  return j.dump(2);
}

std::pair<RatingDataset, RatingDataset> split_train_test(const RatingDataset& dataset,
                                                         double test_fraction,
                                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  const std::size_t n = dataset.size();
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  if (n < 2 || n_test == 0 || n_test >= n)
    throw DataError("dataset with " + std::to_string(n) + " records is too small to split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, stream::kSplit);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> in_test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

  std::vector<bool> user_in_train(dataset.num_users(), false);
  std::vector<bool> item_in_train(dataset.num_items(), false);
  const auto& records = dataset.records();
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_test[i]) {
      user_in_train[records[i].user] = true;
      item_in_train[records[i].item] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (in_test[i] && (!user_in_train[r.user] || !item_in_train[r.item])) {
      in_test[i] = false;
      user_in_train[r.user] = true;
      item_in_train[r.item] = true;
    }
  }

  std::vector<RatingRecord> train, test;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? test : train).push_back(records[i]);
  if (test.empty()) throw DataError("no test record survives cold-start reassignment");
  return {dataset.with_records(std::move(train)), dataset.with_records(std::move(test))};
}

RatingDataset subsample_train(const RatingDataset& train, int ts_percent, std::uint64_t seed) {
  if (ts_percent != 40 && ts_percent != 60 && ts_percent != 80 && ts_percent != 100)
    throw ConfigError("training segment must be one of 40, 60, 80, 100");
  if (ts_percent == 100) return train;
  const std::size_t n = train.size();
  const std::size_t keep = static_cast<std::size_t>(ts_percent) * n / 100;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, stream::kSubsample);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  std::vector<RatingRecord> kept;
  kept.reserve(keep);
  for (std::size_t i : order) kept.push_back(train.records()[i]);
  return train.with_records(std::move(kept));
}

}  // namespace mcgraph
