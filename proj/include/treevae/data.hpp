#pragma once

#include "treevae/record.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace treevae {

// Schema field <- CSV column header. Scalar fields are parsed as decimals.
struct ColumnMap {
  struct Entry {
    std::string field;
    std::string column;
    bool scalar = false;
  };
  std::vector<Entry> entries;

  // OpenAddresses layout: LON,LAT,NUMBER,STREET,UNIT,CITY,DISTRICT,REGION,POSTCODE,...
  static ColumnMap openaddresses();
  // "field=COLUMN,field=COLUMN"; scalar fields are those named in `scalars`.
  static ColumnMap parse(std::string_view spec, const std::vector<std::string>& scalars);
};

struct CsvParseResult {
  std::vector<Record> records;
  std::size_t rows = 0;
  std::size_t skipped = 0;
};

std::vector<std::string> split_csv_line(std::string_view line);
CsvParseResult parse_csv(std::istream& in, const ColumnMap& map);
CsvParseResult parse_csv(const std::filesystem::path& path, const ColumnMap& map);
// Lines starting with '#' before the header are skipped by parse_csv.
void write_csv(std::ostream& out, const std::vector<Record>& records, const ColumnMap& map,
               std::string_view comment = {});

struct DatasetSplit {
  std::vector<Record> train;
  std::vector<Record> test;
  std::vector<Record> validation;
  std::uint64_t seed = 0;
};

// Each record goes to train/test/validation with probability 0.8/0.1/0.1
// from a hash of (seed, index).
DatasetSplit split_8_1_1(const std::vector<Record>& records, std::uint64_t seed);

// Comma-separated text form: string fields, then scalars rounded to
// `decimals` places.
struct TextLayout {
  std::vector<std::string> strings;
  std::vector<std::string> scalars;
  int decimals = 5;

  // number, street, city, postcode, lat, long
  static TextLayout address();
  std::size_t size() const { return strings.size() + scalars.size(); }
};

std::string serialize_text(const Record& record, const TextLayout& layout = TextLayout::address());

// Desk-scale stand-in for the address corpus: per-zip 2-D Gaussian
// coordinates, one city per zip and a handful of streets per zip.
std::vector<Record> make_toy_dataset(std::size_t n_records, std::size_t n_zips, std::uint64_t seed);

// One JSON object per line: {"text": {...}, "scalars": {...}}. A non-null
// header is written first as {"header": ...} and skipped on reading.
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records,
                 const nlohmann::json& header = nullptr);
std::vector<Record> read_jsonl(const std::filesystem::path& path);

// .jsonl is read as JSON lines, anything else as CSV with `map`.
std::vector<Record> load_records(const std::filesystem::path& path, const ColumnMap& map);

}  // namespace treevae
