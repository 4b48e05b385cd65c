#include "treevae/nn/vocabulary.hpp"

#include <algorithm>
#include <bitset>
#include <cstdio>

namespace treevae::nn {

Vocabulary Vocabulary::from_bytes(std::string_view bytes) {
  std::bitset<256> seen;
  for (unsigned char c : bytes) seen.set(c);
  Vocabulary v;
  for (int c = 0; c < 256; ++c) {
    if (seen.test(static_cast<std::size_t>(c))) {
      v.index_[static_cast<std::size_t>(c)] = static_cast<int>(v.bytes_.size());
      v.bytes_.push_back(static_cast<char>(c));
    }
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  std::string all;
  for (const auto& s : corpus) all += s;
  return from_bytes(all);
}

int Vocabulary::id(unsigned char c) const {
  const int i = index_[c];
  if (i < 0) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02x", c);
    throw OutOfVocabulary(std::string("character ") + buf + " is not in the vocabulary");
  }
  return i;
}

char Vocabulary::byte(int id) const {
  if (id < 0 || id >= static_cast<int>(bytes_.size())) throw std::out_of_range("not a character id");
  return bytes_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view s) const {
  std::vector<int> out;
  out.reserve(s.size() + 1);
  for (unsigned char c : s) out.push_back(id(c));
  out.push_back(eos());
  return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    if (i == eos()) break;
    out.push_back(byte(i));
  }
  return out;
}

nlohmann::json Vocabulary::to_json() const {
  std::vector<int> codes(bytes_.begin(), bytes_.end());
  for (auto& c : codes) c = static_cast<unsigned char>(c);
  return {{"bytes", codes}, {"eos", eos()}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  std::string bytes;
  for (int c : j.at("bytes").get<std::vector<int>>()) bytes.push_back(static_cast<char>(c));
  Vocabulary v = from_bytes(bytes);
  if (v.bytes_ != bytes || v.eos() != j.at("eos").get<int>()) {
    throw std::runtime_error("vocabulary must list distinct bytes in ascending order");
  }
  return v;
}

}  // namespace treevae::nn
