#pragma once

#include "treevae/data.hpp"
#include "treevae/record.hpp"

#include <Eigen/Dense>

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace treevae::metrics {

struct ZipStats {
  std::size_t count = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();  // unbiased sample covariance
};

// Which record fields carry the category and the coordinate pair.
struct CoordinateFields {
  std::string zip = "postcode";
  std::string x = "lat";
  std::string y = "long";
};

class ZipStatsTable {
 public:
  static constexpr std::size_t kMinCount = 2;

  // Zips with fewer than kMinCount records are dropped.
  static ZipStatsTable fit(const std::vector<Record>& records, const CoordinateFields& fields = {});

  const ZipStats* find(std::string_view zip) const;
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, ZipStats, std::less<>>& entries() const { return table_; }
  const CoordinateFields& fields() const { return fields_; }

 private:
  std::map<std::string, ZipStats, std::less<>> table_;
  CoordinateFields fields_;
};

// (x - mu)^T Sigma^-1 (x - mu) after adding a 1e-9 * trace/2 ridge. Returns
// nullopt when Sigma stays singular.
std::optional<double> mahalanobis_sq(const Eigen::Vector2d& x, const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma);

// 1 - CDF_chi2_k(d_sq).
double chi2_pvalue(double d_sq, int dof = 2);

// p-value of one record against the table; 0 for unseen zips, missing
// coordinates, malformed records or singular covariances.
double record_pvalue(const Record& record, const ZipStatsTable& table);
std::vector<double> record_pvalues(const std::vector<Record>& records, const ZipStatsTable& table);

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

SummaryStats summarize(std::vector<double> values);
SummaryStats pvalue_stats(const std::vector<Record>& records, const ZipStatsTable& table);

// Quartiles by linear interpolation plus min/max.
struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};
BoxStats box_stats(std::vector<double> values);

std::size_t levenshtein(std::string_view a, std::string_view b);
// Edit distance divided by the original's length; nullopt for an empty
// original.
std::optional<double> levenshtein_per_char(std::string_view original, std::string_view reconstruction);

struct Membership {
  std::size_t count = 0;
  std::size_t total = 0;
  double proportion = 0.0;
};
Membership membership(const std::vector<Record>& generated, const std::set<std::string, std::less<>>& known,
                      std::string_view field = "street");
std::set<std::string, std::less<>> field_values(const std::vector<Record>& records, std::string_view field = "street");

enum class MalformedReason { too_few_fields, bad_float };
std::string_view to_string(MalformedReason r);

struct Malformed {
  MalformedReason reason;
};

// Parses a comma-separated text sample back into a record. Needs at least
// layout.size() values and the trailing scalars as decimal literals.
std::variant<Record, Malformed> malformed_check(std::string_view line,
                                                const TextLayout& layout = TextLayout::address());

}  // namespace treevae::metrics
