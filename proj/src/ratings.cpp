#include "macs/ratings.hpp"

#include "macs/error.hpp"
#include "macs/format.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string_view>

namespace macs {

namespace {

enum class Delimiter { Tab, Comma, DoubleColon };

Delimiter detect_delimiter(std::string_view line) {
  if (line.find("::") != std::string_view::npos) return Delimiter::DoubleColon;
  if (line.find('\t') != std::string_view::npos) return Delimiter::Tab;
  return Delimiter::Comma;
}

std::vector<std::string_view> split(std::string_view line, Delimiter d) {
  std::vector<std::string_view> fields;
  const std::string_view sep = d == Delimiter::DoubleColon ? "::"
                               : d == Delimiter::Tab       ? "\t"
                                                           : ",";
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void RatingsTable::add(const RatingRecord& record) {
  if (!(record.rating >= 1.0 && record.rating <= 5.0)) {
    throw RangeError("rating " + format_double(record.rating) + " outside [1, 5]");
  }
  std::string key = std::to_string(record.user_id) + ':' + std::to_string(record.item_id) +
                    ':' + std::to_string(record.timestamp);
  if (!seen_.emplace(std::move(key), true).second) {
    throw std::invalid_argument("duplicate (user, item, timestamp) record");
  }
  auto index_of = [](auto& map, auto& ids, std::int64_t id) {
    auto [it, inserted] = map.emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };
  record_user_.push_back(index_of(user_index_, user_ids_, record.user_id));
  record_item_.push_back(index_of(item_index_, item_ids_, record.item_id));
  records_.push_back(record);
}

RatingsTable ingest_ratings(std::istream& source) {
  RatingsTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_delimiter = false;
  Delimiter delim = Delimiter::Tab;
  bool first_content_line = true;
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!have_delimiter) {
      delim = detect_delimiter(view);
      have_delimiter = true;
    }
    const auto fields = split(view, delim);
    if (first_content_line) {
      first_content_line = false;
      std::int64_t probe = 0;
      if (!parse_number(fields[0], probe)) continue;  // header row
    }
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    RatingRecord rec;
    if (!parse_number(fields[0], rec.user_id)) throw ParseError(line_no, "bad user id");
    if (!parse_number(fields[1], rec.item_id)) throw ParseError(line_no, "bad item id");
    if (!parse_number(fields[2], rec.rating)) throw ParseError(line_no, "bad rating");
    if (!parse_number(fields[3], rec.timestamp)) throw ParseError(line_no, "bad timestamp");
    try {
      table.add(rec);
    } catch (const RangeError& e) {
      throw RangeError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (table.empty()) throw EmptyDataset("no rating records in input");
  return table;
}

RatingsTable ingest_ratings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ratings file: " + path);
  return ingest_ratings(in);
}

std::string serialize_ratings(const RatingsTable& table) {
  std::string out;
  for (const auto& r : table.records()) {
    out += std::to_string(r.user_id);
    out += '\t';
    out += std::to_string(r.item_id);
    out += '\t';
    out += format_double(r.rating);
    out += '\t';
    out += std::to_string(r.timestamp);
    out += '\n';
  }
  return out;
}

}  // namespace macs
