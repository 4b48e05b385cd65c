#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treevae {

enum class FieldKind { string, scalar };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::string;
  int tag = 0;

  bool operator==(const FieldSpec&) const = default;
};

struct Schema {
  std::string name;
  std::vector<FieldSpec> fields;

  bool operator==(const Schema&) const = default;

  const FieldSpec* find(std::string_view field) const;
  std::vector<std::string> string_fields() const;
  std::vector<std::string> scalar_fields() const;
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Grammar: `message <Name> { (optional (float|string) <name> = <int>;)* }`
// with `//` line comments.
Schema parse_schema(std::string_view text);
std::string print_schema(const Schema& schema);
std::uint64_t schema_hash(const Schema& schema);

enum class ModelVariant { tuple, pass_through, text_concat };

std::string_view to_string(ModelVariant v);
ModelVariant parse_variant(std::string_view s);

enum class ModuleKind { tuple, simple_tuple, string_literal, scalar_tuple };

// One node of the compiled model tree. Leaves name the record fields they
// read; `module_id` identifies parameter sharing between string leaves.
struct ModuleSpec {
  ModuleKind kind = ModuleKind::string_literal;
  std::vector<std::string> fields;
  std::string module_id;
  std::vector<ModuleSpec> children;

  bool operator==(const ModuleSpec&) const = default;
};

struct ModelPlan {
  ModuleSpec root;
  int latent_dim = 128;
  ModelVariant variant = ModelVariant::tuple;
  // Text variant only: string fields serialized before the scalars.
  std::vector<std::string> text_fields;
  std::vector<std::string> scalar_fields;

  bool operator==(const ModelPlan&) const = default;

  std::size_t arity() const { return root.kind == ModuleKind::string_literal ? 1 : root.children.size(); }
};

ModelPlan compile(const Schema& schema, int latent_dim, ModelVariant variant,
                  const std::vector<std::string>& omitted_fields = {});

// The address message used throughout the project.
extern const std::string_view kAddressSchemaText;

}  // namespace treevae
