#include "treevae/data.hpp"

#include "treevae/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace treevae {

namespace {

std::optional<double> parse_decimal(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

bool valid_coordinate(std::string_view field, double v) {
  if (field == address::lat) return v >= -90.0 && v <= 90.0;
  if (field == address::lon) return v >= -180.0 && v <= 180.0;
  return true;
}

}  // namespace

ColumnMap ColumnMap::openaddresses() {
  ColumnMap m;
  m.entries = {{"lat", "LAT", true},          {"long", "LON", true},        {"number", "NUMBER", false},
               {"street", "STREET", false},   {"unit", "UNIT", false},      {"city", "CITY", false},
               {"district", "DISTRICT", false}, {"region", "REGION", false}, {"postcode", "POSTCODE", false}};
  return m;
}

ColumnMap ColumnMap::parse(std::string_view spec, const std::vector<std::string>& scalars) {
  ColumnMap m;
  std::string s(spec);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw std::invalid_argument("bad column map entry '" + item + "' (expected field=COLUMN)");
    }
    Entry e;
    e.field = item.substr(0, eq);
    e.column = item.substr(eq + 1);
    e.scalar = std::find(scalars.begin(), scalars.end(), e.field) != scalars.end();
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

CsvParseResult parse_csv(std::istream& in, const ColumnMap& map) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV input is empty (no header)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  while (line.starts_with('#')) {
    if (!std::getline(in, line)) throw std::runtime_error("CSV input has no header");
  }
  const auto header = split_csv_line(line);
  std::vector<std::pair<const ColumnMap::Entry*, std::size_t>> cols;
  for (const auto& e : map.entries) {
    auto it = std::find(header.begin(), header.end(), e.column);
    if (it == header.end()) throw std::runtime_error("CSV is missing mapped column '" + e.column + "'");
    cols.emplace_back(&e, static_cast<std::size_t>(it - header.begin()));
  }
  CsvParseResult result;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++result.rows;
    const auto values = split_csv_line(line);
    Record r;
    bool ok = true;
    for (const auto& [e, idx] : cols) {
      const std::string v = idx < values.size() ? values[idx] : std::string{};
      if (e->scalar) {
        auto d = parse_decimal(v);
        if (!d || !valid_coordinate(e->field, *d)) {
          ok = false;
          break;
        }
        r.scalars[e->field] = *d;
      } else if (!v.empty()) {
        r.text[e->field] = v;
      }
    }
    if (ok) {
      result.records.push_back(std::move(r));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

CsvParseResult parse_csv(const std::filesystem::path& path, const ColumnMap& map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_csv(in, map);
}

void write_csv(std::ostream& out, const std::vector<Record>& records, const ColumnMap& map, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t i = 0; i < map.entries.size(); ++i) out << (i ? "," : "") << csv_quote(map.entries[i].column);
  out << '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < map.entries.size(); ++i) {
      const auto& e = map.entries[i];
      if (i) out << ',';
      if (e.scalar) {
        if (auto v = r.scalar(e.field)) out << shortest(*v);
      } else {
        out << csv_quote(std::string(r.str(e.field)));
      }
    }
    out << '\n';
  }
}

DatasetSplit split_8_1_1(const std::vector<Record>& records, std::uint64_t seed) {
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double u = hash_uniform(seed, i);
    if (u < 0.8) {
      split.train.push_back(records[i]);
    } else if (u < 0.9) {
      split.test.push_back(records[i]);
    } else {
      split.validation.push_back(records[i]);
    }
  }
  return split;
}

TextLayout TextLayout::address() {
  TextLayout l;
  l.strings = {"number", "street", "city", "postcode"};
  l.scalars = {"lat", "long"};
  return l;
}

std::string serialize_text(const Record& record, const TextLayout& layout) {
  if (!record.raw.empty() && record.malformed) return record.raw;
  std::string out;
  bool first = true;
  for (const auto& f : layout.strings) {
    const auto v = record.str(f);
    if (v.find(',') != std::string_view::npos) {
      throw std::invalid_argument("field '" + f + "' contains a comma: '" + std::string(v) + "'");
    }
    if (!first) out += ',';
    out += v;
    first = false;
  }
  for (const auto& f : layout.scalars) {
    auto v = record.scalar(f);
    if (!v) throw std::invalid_argument("record is missing scalar field '" + f + "'");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", layout.decimals, *v);
    if (!first) out += ',';
    out += buf;
    first = false;
  }
  return out;
}

std::vector<Record> make_toy_dataset(std::size_t n_records, std::size_t n_zips, std::uint64_t seed) {
  if (n_zips < 2) throw std::invalid_argument("toy dataset needs at least 2 zips");
  if (n_records < 10 * n_zips) throw std::invalid_argument("toy dataset needs at least 10 records per zip");
  static constexpr std::array<std::string_view, 24> kCities = {
      "BARRE",      "MONTPELIER", "BURLINGTON", "RUTLAND",    "BENNINGTON", "BRATTLEBORO",
      "STOWE",      "GROTON",     "TOPSHAM",    "NEWPORT",    "MIDDLEBURY", "WINOOSKI",
      "ESSEX",      "WILLISTON",  "SHELBURNE",  "WOODSTOCK",  "LUDLOW",     "RANDOLPH",
      "NORTHFIELD", "HARDWICK",   "CASTLETON",  "FAIR HAVEN", "SWANTON",    "HINESBURG"};
  static constexpr std::array<std::string_view, 32> kStreetWords = {
      "MAIN",   "HARTS",  "SECOND", "PAINT WORKS", "CHURCH", "MAPLE",  "ELM",    "PINE",
      "RIVER",  "MILL",   "SCHOOL", "HILL",        "POND",   "NORTH",  "SOUTH",  "CENTER",
      "BROOK",  "LAKE",   "FOREST", "MEADOW",      "SPRING", "UNION",  "PARK",   "HIGH",
      "BRIDGE", "VALLEY", "RIDGE",  "ORCHARD",     "CEDAR",  "BIRCH",  "SUMMIT", "FARM"};
  static constexpr std::array<std::string_view, 4> kSuffixes = {"RD", "ST", "LN", "AVE"};

  Rng rng = derive_rng(seed, "toy-dataset");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  struct Zip {
    std::string code;
    std::string city;
    std::vector<std::string> streets;
    double lat, lon, sd_lat, sd_lon, rho;
  };
  std::vector<Zip> zips;
  std::set<std::string> codes;
  while (zips.size() < n_zips) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "05%03d", static_cast<int>(u01(rng) * 1000.0) % 1000);
    if (!codes.insert(buf).second) continue;
    Zip z;
    z.code = buf;
    z.city = std::string(kCities[zips.size() % kCities.size()]);
    if (zips.size() >= kCities.size()) z.city += " " + std::to_string(zips.size() / kCities.size());
    for (int s = 0; s < 4; ++s) {
      const auto w = kStreetWords[static_cast<std::size_t>(u01(rng) * kStreetWords.size()) % kStreetWords.size()];
      const auto sfx = kSuffixes[static_cast<std::size_t>(u01(rng) * kSuffixes.size()) % kSuffixes.size()];
      z.streets.push_back(std::string(w) + " " + std::string(sfx));
    }
    z.lat = 42.8 + 2.1 * u01(rng);
    z.lon = -73.3 + 1.7 * u01(rng);
    z.sd_lat = 0.01 + 0.03 * u01(rng);
    z.sd_lon = 0.01 + 0.03 * u01(rng);
    z.rho = -0.7 + 1.4 * u01(rng);
    zips.push_back(std::move(z));
  }

  std::vector<Record> records;
  records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const Zip& z = zips[i % n_zips];
    const double a = normal(rng), b = normal(rng);
    Record r;
    r.scalars["lat"] = z.lat + z.sd_lat * a;
    r.scalars["long"] = z.lon + z.sd_lon * (z.rho * a + std::sqrt(1.0 - z.rho * z.rho) * b);
    r.text["number"] = std::to_string(1 + static_cast<int>(u01(rng) * 299.0));
    r.text["street"] = z.streets[static_cast<std::size_t>(u01(rng) * z.streets.size()) % z.streets.size()];
    r.text["city"] = z.city;
    r.text["postcode"] = z.code;
    records.push_back(std::move(r));
  }
  std::shuffle(records.begin(), records.end(), rng);
  return records;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records, const nlohmann::json& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (!header.is_null()) out << nlohmann::json{{"header", header}}.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::json j = {{"text", r.text}, {"scalars", r.scalars}};
    if (r.malformed) {
      j["malformed"] = true;
      j["raw"] = r.raw;
    }
    out << j.dump() << '\n';
  }
}

std::vector<Record> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("header")) continue;
      Record r;
      if (j.contains("text")) {
        for (const auto& [k, v] : j["text"].items()) r.text[k] = v.get<std::string>();
      }
      if (j.contains("scalars")) {
        for (const auto& [k, v] : j["scalars"].items()) r.scalars[k] = v.get<double>();
      }
      r.malformed = j.value("malformed", false);
      r.raw = j.value("raw", std::string{});
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Record> load_records(const std::filesystem::path& path, const ColumnMap& map) {
  if (path.extension() == ".jsonl") return read_jsonl(path);
  auto parsed = parse_csv(path, map);
  if (parsed.skipped > 0) {
    std::cerr << path.string() << ": skipped " << parsed.skipped << " of " << parsed.rows
              << " rows with unusable coordinates\n";
  }
  return std::move(parsed.records);
}

}  // namespace treevae
