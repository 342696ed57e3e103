#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mcgraph {

/// One user's ratings of one item: the overall score plus one score per criterion.
struct RatingRecord {
  std::string user_id;
  std::string item_id;
  std::size_t user = 0;  // dense index into the dataset's user map
  std::size_t item = 0;  // dense index into the dataset's item map
  double overall = 0.0;
  std::vector<double> criteria;

  bool operator==(const RatingRecord&) const = default;
};

/// Dense id <-> index assignment, in first-appearance order.
class IndexMap {
 public:
  /// Returns the index of `id`, inserting it if unseen.
  std::size_t intern(const std::string& id);
  std::size_t at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  bool operator==(const IndexMap& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Immutable multi-criteria rating dataset. Splits and subsamples share the
/// index maps of their parent, so user/item indices stay comparable.
class RatingDataset {
 public:
  RatingDataset() = default;

  /// Builds a dataset from records; indices are assigned in first-appearance
  /// order and a repeated (user, item) pair keeps the last record.
  static RatingDataset from_records(std::vector<RatingRecord> records,
                                    std::vector<std::string> criteria_names = {});

  /// Same index maps as `parent`, different record subset.
  RatingDataset with_records(std::vector<RatingRecord> records) const;

  /// Keeps only the first `count` criteria columns.
  RatingDataset with_criteria_prefix(std::size_t count) const;

  std::size_t num_users() const noexcept { return users_ ? users_->size() : 0; }
  std::size_t num_items() const noexcept { return items_ ? items_->size() : 0; }
  std::size_t num_nodes() const noexcept { return num_users() + num_items(); }
  std::size_t num_criteria() const noexcept { return criteria_names_.size(); }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const std::vector<RatingRecord>& records() const noexcept { return records_; }
  const std::vector<std::string>& criteria_names() const noexcept { return criteria_names_; }
  const IndexMap& users() const { return *users_; }
  const IndexMap& items() const { return *items_; }

  bool operator==(const RatingDataset& other) const;

 private:
  std::shared_ptr<const IndexMap> users_;
  std::shared_ptr<const IndexMap> items_;
  std::vector<std::string> criteria_names_;
  std::vector<RatingRecord> records_;
};

struct DatasetStats {
  double avg_reviews_per_user = 0.0;
  double avg_reviews_per_item = 0.0;
  double sparsity = 0.0;
  std::size_t num_criteria = 0;
  double variance_criteria_ratings = 0.0;
};

/// Parses `user_id,item_id,overall,<criterion>...` CSV. Lines starting with
/// '#' before the header are treated as comments.
RatingDataset load_ratings(std::istream& in);
RatingDataset load_ratings(const std::filesystem::path& path);

void write_ratings(std::ostream& out, const RatingDataset& dataset);
void write_ratings(const std::filesystem::path& path, const RatingDataset& dataset);

/// Maps every rating affinely from [lo, hi] onto [1, 5].
RatingDataset normalize_scale(const RatingDataset& dataset, double lo, double hi);

DatasetStats compute_stats(const RatingDataset& dataset);
std::string stats_to_json(const DatasetStats& stats);

inline constexpr double kDefaultTestFraction = 0.2;

/// Seeded random partition. Test records whose user or item would be absent
/// from train are moved to train.
std::pair<RatingDataset, RatingDataset> split_train_test(const RatingDataset& dataset,
                                                         double test_fraction,
                                                         std::uint64_t seed);

/// Uniformly keeps floor(ts_percent * |train| / 100) records; ts_percent must
/// be one of 40, 60, 80, 100.
RatingDataset subsample_train(const RatingDataset& train, int ts_percent, std::uint64_t seed);

}  // namespace mcgraph
