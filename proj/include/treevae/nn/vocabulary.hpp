#pragma once

#include <json.hpp>

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treevae::nn {

class OutOfVocabulary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observed bytes in ascending order, followed by the end-of-string token.
class Vocabulary {
 public:
  Vocabulary() { index_.fill(-1); }

  static Vocabulary build(std::span<const std::string> corpus);
  static Vocabulary from_bytes(std::string_view bytes);

  int size() const { return static_cast<int>(bytes_.size()) + 1; }
  int eos() const { return static_cast<int>(bytes_.size()); }
  bool contains(unsigned char c) const { return index_[c] >= 0; }
  int id(unsigned char c) const;
  char byte(int id) const;

  // Character ids followed by EOS. Throws OutOfVocabulary.
  std::vector<int> encode(std::string_view s) const;
  std::string decode(std::span<const int> ids) const;

  const std::string& bytes() const { return bytes_; }
  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& o) const { return bytes_ == o.bytes_; }

 private:
  std::string bytes_;
  std::array<int, 256> index_{};
};

}  // namespace treevae::nn
