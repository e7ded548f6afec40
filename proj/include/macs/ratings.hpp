#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

namespace macs {

struct RatingRecord {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const RatingRecord&) const = default;
};

// Validated rating log. User and item indices are assigned densely by first
// appearance, so the same input always yields the same indexing.
class RatingsTable {
 public:
  // Appends a record; throws RangeError for ratings outside [1, 5] and
  // std::invalid_argument for a repeated (user, item, timestamp) triple.
  void add(const RatingRecord& record);

  const std::vector<RatingRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  int n_users() const { return static_cast<int>(user_ids_.size()); }
  int n_items() const { return static_cast<int>(item_ids_.size()); }
  int user_index(std::size_t record) const { return record_user_[record]; }
  int item_index(std::size_t record) const { return record_item_[record]; }
  std::int64_t user_id(int index) const { return user_ids_[static_cast<std::size_t>(index)]; }
  std::int64_t item_id(int index) const { return item_ids_[static_cast<std::size_t>(index)]; }

  bool operator==(const RatingsTable& other) const { return records_ == other.records_; }

 private:
  std::vector<RatingRecord> records_;
  std::vector<int> record_user_;
  std::vector<int> record_item_;
  std::vector<std::int64_t> user_ids_;
  std::vector<std::int64_t> item_ids_;
  std::unordered_map<std::int64_t, int> user_index_;
  std::unordered_map<std::int64_t, int> item_index_;
  std::unordered_map<std::string, bool> seen_;
};

// Parses one record per line: user, item, rating, timestamp separated by tab,
// comma or "::" (detected from the first data line). A non-numeric first line
// is treated as a header and skipped; blank lines are ignored.
RatingsTable ingest_ratings(std::istream& source);
RatingsTable ingest_ratings_file(const std::string& path);

// Tab-separated, one record per line, ratings printed in shortest round-trip form.
std::string serialize_ratings(const RatingsTable& table);

}  // namespace macs
