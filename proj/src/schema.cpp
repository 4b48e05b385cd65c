#include "treevae/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace treevae {

const std::string_view kAddressSchemaText = R"(message Address {
  optional float lat = 1;
  optional float long = 2;

  // We don't discount the possibility that some addresses could have
  // non-numerical entries for fields that seem like they should be numerical,
  // like street numbers for example:
  optional string number = 3;
  optional string street = 4;
  optional string unit = 5;
  optional string city = 6;
  optional string district = 7;
  optional string region = 8;
  optional string postcode = 9;
}
)";

const FieldSpec* Schema::find(std::string_view field) const {
  for (const auto& f : fields) {
    if (f.name == field) return &f;
  }
  return nullptr;
}

std::vector<std::string> Schema::string_fields() const {
  std::vector<std::string> out;
  for (const auto& f : fields) {
    if (f.kind == FieldKind::string) out.push_back(f.name);
  }
  return out;
}

std::vector<std::string> Schema::scalar_fields() const {
  std::vector<std::string> out;
  for (const auto& f : fields) {
    if (f.kind == FieldKind::scalar) out.push_back(f.name);
  }
  return out;
}

namespace {

struct Token {
  enum Kind { ident, number, punct, end } kind = end;
  std::string text;
  int line = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token tok;
    tok.line = line_;
    if (pos_ >= text_.size()) return tok;
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      tok.kind = Token::ident;
      tok.text = std::string(text_.substr(start, pos_ - start));
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      const std::size_t start = pos_++;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      tok.kind = Token::number;
      tok.text = std::string(text_.substr(start, pos_ - start));
    } else {
      tok.kind = Token::punct;
      tok.text = std::string(1, c);
      ++pos_;
    }
    return tok;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  Schema parse() {
    Schema schema;
    expect_ident("message");
    schema.name = take_ident("message name");
    expect_punct('{');
    std::set<int> tags;
    std::set<std::string> names;
    while (!(cur_.kind == Token::punct && cur_.text == "}")) {
      if (cur_.kind == Token::end) throw SchemaError(cur_.line, "unexpected end of input, expected '}'");
      const int line = cur_.line;
      expect_ident("optional");
      if (cur_.kind != Token::ident) throw SchemaError(cur_.line, "expected field type");
      FieldSpec field;
      if (cur_.text == "float") {
        field.kind = FieldKind::scalar;
      } else if (cur_.text == "string") {
        field.kind = FieldKind::string;
      } else {
        throw SchemaError(cur_.line, "unsupported field type '" + cur_.text + "' (only float and string)");
      }
      advance();
      field.name = take_ident("field name");
      expect_punct('=');
      if (cur_.kind != Token::number) throw SchemaError(cur_.line, "expected field tag");
      field.tag = std::stoi(cur_.text);
      if (field.tag <= 0) throw SchemaError(cur_.line, "field tag must be positive");
      advance();
      expect_punct(';');
      if (!tags.insert(field.tag).second) {
        throw SchemaError(line, "duplicate tag " + std::to_string(field.tag));
      }
      if (!names.insert(field.name).second) {
        throw SchemaError(line, "duplicate field name '" + field.name + "'");
      }
      schema.fields.push_back(std::move(field));
    }
    if (schema.fields.empty()) throw SchemaError(cur_.line, "message " + schema.name + " has no fields");
    advance();
    if (cur_.kind != Token::end) throw SchemaError(cur_.line, "trailing input after message");
    return schema;
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  void expect_ident(std::string_view word) {
    if (cur_.kind != Token::ident || cur_.text != word) {
      throw SchemaError(cur_.line, "expected '" + std::string(word) + "', got '" + cur_.text + "'");
    }
    advance();
  }

  void expect_punct(char c) {
    if (cur_.kind != Token::punct || cur_.text[0] != c) {
      throw SchemaError(cur_.line, std::string("expected '") + c + "', got '" + cur_.text + "'");
    }
    advance();
  }

  std::string take_ident(std::string_view what) {
    if (cur_.kind != Token::ident) throw SchemaError(cur_.line, "expected " + std::string(what));
    std::string s = cur_.text;
    advance();
    return s;
  }

  Lexer lexer_;
  Token cur_;
};

}  // namespace

Schema parse_schema(std::string_view text) { return Parser(text).parse(); }

std::string print_schema(const Schema& schema) {
  std::ostringstream os;
  os << "message " << schema.name << " {\n";
  for (const auto& f : schema.fields) {
    os << "  optional " << (f.kind == FieldKind::scalar ? "float" : "string") << ' ' << f.name << " = "
       << f.tag << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::uint64_t schema_hash(const Schema& schema) {
  // FNV-1a over the canonical text.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : print_schema(schema)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::tuple: return "tuple";
    case ModelVariant::pass_through: return "pass_through";
    case ModelVariant::text_concat: return "text_concat";
  }
  return "?";
}

ModelVariant parse_variant(std::string_view s) {
  if (s == "tuple") return ModelVariant::tuple;
  if (s == "pass_through") return ModelVariant::pass_through;
  if (s == "text_concat") return ModelVariant::text_concat;
  throw std::invalid_argument("unknown model variant '" + std::string(s) + "'");
}

ModelPlan compile(const Schema& schema, int latent_dim, ModelVariant variant,
                  const std::vector<std::string>& omitted_fields) {
  if (schema.fields.empty()) throw std::invalid_argument("schema '" + schema.name + "' has no fields");
  if (latent_dim <= 0) throw std::invalid_argument("latent_dim must be positive");
  for (const auto& name : omitted_fields) {
    const FieldSpec* f = schema.find(name);
    if (f == nullptr || f->kind != FieldKind::string) {
      throw std::invalid_argument("omitted field '" + name + "' is not a string field of the schema");
    }
  }
  auto omitted = [&](const std::string& name) {
    return std::find(omitted_fields.begin(), omitted_fields.end(), name) != omitted_fields.end();
  };

  ModelPlan plan;
  plan.variant = variant;
  plan.latent_dim = latent_dim;
  plan.scalar_fields = schema.scalar_fields();
  const auto strings = schema.string_fields();

  if (variant == ModelVariant::text_concat) {
    for (const auto& s : strings) {
      if (!omitted(s)) plan.text_fields.push_back(s);
    }
    plan.latent_dim = 2 * latent_dim;
    plan.root.kind = ModuleKind::string_literal;
    plan.root.module_id = "text";
    plan.root.fields = plan.text_fields;
    plan.root.fields.insert(plan.root.fields.end(), plan.scalar_fields.begin(), plan.scalar_fields.end());
    return plan;
  }

  plan.root.kind = variant == ModelVariant::tuple ? ModuleKind::tuple : ModuleKind::simple_tuple;
  plan.root.module_id = variant == ModelVariant::tuple ? "tuple" : "simple_tuple";
  for (const auto& s : strings) {
    // The tuple variant keeps every field; only pass-through honours omissions.
    if (variant == ModelVariant::pass_through && omitted(s)) continue;
    ModuleSpec leaf;
    leaf.kind = ModuleKind::string_literal;
    leaf.fields = {s};
    leaf.module_id = variant == ModelVariant::tuple ? "string" : "string_" + s;
    plan.root.children.push_back(std::move(leaf));
  }
  if (!plan.scalar_fields.empty()) {
    ModuleSpec leaf;
    leaf.kind = ModuleKind::scalar_tuple;
    leaf.fields = plan.scalar_fields;
    leaf.module_id = "scalars";
    plan.root.children.push_back(std::move(leaf));
  }
  if (plan.root.children.empty()) throw std::invalid_argument("every field of the schema was omitted");
  return plan;
}

}  // namespace treevae
