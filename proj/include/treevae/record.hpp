#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace treevae {

// One structured record keyed by schema field name. Absent string fields
// read as empty.
struct Record {
  std::map<std::string, std::string, std::less<>> text;
  std::map<std::string, double, std::less<>> scalars;
  // Set for text-variant samples that failed to parse; `raw` keeps the text.
  bool malformed = false;
  std::string raw;

  bool operator==(const Record&) const = default;

  std::string_view str(std::string_view field) const {
    auto it = text.find(field);
    return it == text.end() ? std::string_view{} : std::string_view{it->second};
  }
  std::optional<double> scalar(std::string_view field) const {
    auto it = scalars.find(field);
    if (it == scalars.end()) return std::nullopt;
    return it->second;
  }
};

// Field names of the address message.
namespace address {
inline constexpr std::string_view lat = "lat";
inline constexpr std::string_view lon = "long";
inline constexpr std::string_view number = "number";
inline constexpr std::string_view street = "street";
inline constexpr std::string_view unit = "unit";
inline constexpr std::string_view city = "city";
inline constexpr std::string_view district = "district";
inline constexpr std::string_view region = "region";
inline constexpr std::string_view postcode = "postcode";
}  // namespace address

}  // namespace treevae
