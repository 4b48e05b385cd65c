#include "treevae/metrics.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace treevae::metrics {

ZipStatsTable ZipStatsTable::fit(const std::vector<Record>& records, const CoordinateFields& fields) {
  struct Acc {
    std::vector<Eigen::Vector2d> points;
  };
  std::map<std::string, Acc, std::less<>> acc;
  for (const auto& r : records) {
    if (r.malformed) continue;
    auto x = r.scalar(fields.x);
    auto y = r.scalar(fields.y);
    if (!x || !y) continue;
    acc[std::string(r.str(fields.zip))].points.emplace_back(*x, *y);
  }
  ZipStatsTable t;
  t.fields_ = fields;
  for (auto& [zip, a] : acc) {
    if (a.points.size() < kMinCount) continue;
    ZipStats s;
    s.count = a.points.size();
    for (const auto& p : a.points) s.mean += p;
    s.mean /= static_cast<double>(s.count);
    for (const auto& p : a.points) s.cov += (p - s.mean) * (p - s.mean).transpose();
    s.cov /= static_cast<double>(s.count - 1);
    t.table_.emplace(zip, s);
  }
  return t;
}

const ZipStats* ZipStatsTable::find(std::string_view zip) const {
  auto it = table_.find(zip);
  return it == table_.end() ? nullptr : &it->second;
}

std::optional<double> mahalanobis_sq(const Eigen::Vector2d& x, const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma) {
  Eigen::Matrix2d s = sigma;
  const double ridge = 1e-9 * s.trace() / 2.0;
  s.diagonal().array() += ridge;
  const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
  const Eigen::Vector2d d = x - mu;
  // Explicit 2x2 inverse.
  const double q = (s(1, 1) * d(0) * d(0) - (s(0, 1) + s(1, 0)) * d(0) * d(1) + s(0, 0) * d(1) * d(1)) / det;
  if (!std::isfinite(q)) return std::nullopt;
  return std::max(q, 0.0);
}

double chi2_pvalue(double d_sq, int dof) {
  if (d_sq < 0.0 || std::isnan(d_sq)) throw std::invalid_argument("chi2_pvalue needs d_sq >= 0");
  if (dof <= 0) throw std::invalid_argument("chi2_pvalue needs positive degrees of freedom");
  if (dof == 2) return std::exp(-0.5 * d_sq);
  return boost::math::gamma_q(0.5 * dof, 0.5 * d_sq);
}

double record_pvalue(const Record& record, const ZipStatsTable& table) {
  if (record.malformed) return 0.0;
  const auto& f = table.fields();
  const ZipStats* s = table.find(record.str(f.zip));
  auto x = record.scalar(f.x);
  auto y = record.scalar(f.y);
  if (s == nullptr || !x || !y || !std::isfinite(*x) || !std::isfinite(*y)) return 0.0;
  auto d = mahalanobis_sq(Eigen::Vector2d(*x, *y), s->mean, s->cov);
  if (!d) return 0.0;
  return chi2_pvalue(*d, 2);
}

std::vector<double> record_pvalues(const std::vector<Record>& records, const ZipStatsTable& table) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(record_pvalue(r, table));
  return out;
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

SummaryStats pvalue_stats(const std::vector<Record>& records, const ZipStatsTable& table) {
  return summarize(record_pvalues(records, table));
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return b;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<double> levenshtein_per_char(std::string_view original, std::string_view reconstruction) {
  if (original.empty()) return std::nullopt;
  return static_cast<double>(levenshtein(original, reconstruction)) / static_cast<double>(original.size());
}

std::set<std::string, std::less<>> field_values(const std::vector<Record>& records, std::string_view field) {
  std::set<std::string, std::less<>> out;
  for (const auto& r : records) out.emplace(r.str(field));
  return out;
}

Membership membership(const std::vector<Record>& generated, const std::set<std::string, std::less<>>& known,
                      std::string_view field) {
  Membership m;
  m.total = generated.size();
  for (const auto& r : generated) {
    if (!r.malformed && known.count(r.str(field)) > 0) ++m.count;
  }
  m.proportion = m.total == 0 ? 0.0 : static_cast<double>(m.count) / static_cast<double>(m.total);
  return m;
}

std::string_view to_string(MalformedReason r) {
  switch (r) {
    case MalformedReason::too_few_fields: return "too_few_fields";
    case MalformedReason::bad_float: return "bad_float";
  }
  return "?";
}

namespace {

// Accepts what a float() conversion would: surrounding whitespace, an
// optional sign, decimal or exponent notation, inf and nan.
std::optional<double> parse_float_literal(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty() || s.front() == '+' || s.front() == '-') return std::nullopt;
  // Single underscores between digits are separators.
  std::string digits;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '_') {
      digits += s[i];
      continue;
    }
    const bool between = i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
                         std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if (!between) return std::nullopt;
  }
  double v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ptr != digits.data() + digits.size()) return std::nullopt;
  // Overflow reads as inf and underflow as 0.
  if (ec == std::errc::result_out_of_range) v = std::strtod(digits.c_str(), nullptr);
  else if (ec != std::errc{}) return std::nullopt;
  return negative ? -v : v;
}

}  // namespace

std::variant<Record, Malformed> malformed_check(std::string_view line, const TextLayout& layout) {
  std::vector<std::string_view> values;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    values.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (values.size() < layout.size()) return Malformed{MalformedReason::too_few_fields};

  Record r;
  const std::size_t k = layout.scalars.size();
  for (std::size_t i = 0; i < k; ++i) {
    auto v = parse_float_literal(values[values.size() - k + i]);
    if (!v) return Malformed{MalformedReason::bad_float};
    r.scalars[layout.scalars[i]] = *v;
  }
  // Leading strings align with the front; the last string field is the
  // value just before the scalars.
  const std::size_t ns = layout.strings.size();
  for (std::size_t i = 0; i < ns; ++i) {
    const std::size_t idx = (i + 1 == ns) ? values.size() - k - 1 : i;
    if (!values[idx].empty()) r.text[layout.strings[i]] = std::string(values[idx]);
  }
  return r;
}

}  // namespace treevae::metrics
