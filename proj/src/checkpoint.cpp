#include "treevae/checkpoint.hpp"

#include <fstream>

namespace treevae {

nlohmann::json matrix_to_json(const diff::Matrix& m) {
  nlohmann::json values = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"values", std::move(values)}};
}

diff::Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw std::runtime_error("matrix values do not match shape");
  }
  diff::Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = values[k++].get<double>();
  }
  return m;
}

nlohmann::json store_to_json(const diff::ParameterStore& store, bool with_optimizer_state) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, p] : store.entries()) {
    nlohmann::json e = matrix_to_json(p.value);
    if (with_optimizer_state) {
      e["m"] = matrix_to_json(p.first_moment)["values"];
      e["v"] = matrix_to_json(p.second_moment)["values"];
    }
    params[name] = std::move(e);
  }
  return {{"step", store.step()}, {"parameters", std::move(params)}};
}

diff::ParameterStore store_from_json(const nlohmann::json& j) {
  diff::ParameterStore store;
  for (const auto& [name, e] : j.at("parameters").items()) {
    diff::Matrix& value = store.add(name, matrix_from_json(e));
    if (e.contains("m")) {
      auto& p = store.entry(name);
      p.first_moment = matrix_from_json({{"shape", e["shape"]}, {"values", e["m"]}});
      p.second_moment = matrix_from_json({{"shape", e["shape"]}, {"values", e["v"]}});
    }
    (void)value;
  }
  store.set_step(j.value("step", std::int64_t{0}));
  return store;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace treevae
