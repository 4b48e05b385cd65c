#include "treevae/rng.hpp"
#include "treevae/schema.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace treevae;

TEST_CASE("address message parses into 2 scalars and 7 strings") {
  const Schema s = parse_schema(kAddressSchemaText);
  CHECK(s.name == "Address");
  REQUIRE(s.fields.size() == 9);
  CHECK(s.scalar_fields() == std::vector<std::string>{"lat", "long"});
  CHECK(s.string_fields() ==
        std::vector<std::string>{"number", "street", "unit", "city", "district", "region", "postcode"});
  for (int i = 0; i < 9; ++i) CHECK(s.fields[static_cast<std::size_t>(i)].tag == i + 1);
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(parse_schema("message M {}"), SchemaError);
  CHECK_THROWS_AS(compile(Schema{"M", {}}, 128, ModelVariant::tuple), std::invalid_argument);
  CHECK_THROWS_AS(parse_schema("message M { optional int32 x = 1; }"), SchemaError);
  CHECK_THROWS_AS(parse_schema("message M {\n optional float x = 1;\n optional float y = 1;\n}"), SchemaError);
  CHECK_THROWS_AS(parse_schema("message M {\n optional float x = 1;\n optional string x = 2;\n}"), SchemaError);
  CHECK_THROWS_AS(parse_schema("message M { optional float x = 0; }"), SchemaError);
  try {
    parse_schema("message M {\n  optional float x = 1;\n  optional blob y = 2;\n}");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(compile(parse_schema(kAddressSchemaText), 0, ModelVariant::tuple), std::invalid_argument);
}

TEST_CASE("print then parse is the identity") {
  const std::vector<std::string> sources = {
      std::string(kAddressSchemaText),
      "message A { optional string s = 7; }",
      "// header\nmessage B {\n optional float x = 3; // trailing\n optional string y = 1;\n optional float z = 10;\n}",
  };
  for (const auto& src : sources) {
    const Schema s = parse_schema(src);
    const Schema again = parse_schema(print_schema(s));
    CHECK(again == s);
    CHECK(print_schema(again) == print_schema(s));
    CHECK(schema_hash(again) == schema_hash(s));
  }
}

TEST_CASE("tuple plan: 8 elements, one shared string module, scalars last") {
  const ModelPlan p = compile(parse_schema(kAddressSchemaText), 128, ModelVariant::tuple);
  CHECK(p.root.kind == ModuleKind::tuple);
  REQUIRE(p.arity() == 8);
  for (std::size_t i = 0; i + 1 < p.arity(); ++i) {
    CHECK(p.root.children[i].kind == ModuleKind::string_literal);
    CHECK(p.root.children[i].module_id == "string");
  }
  CHECK(p.root.children.back().kind == ModuleKind::scalar_tuple);
  CHECK(p.root.children.back().fields == std::vector<std::string>{"lat", "long"});
  CHECK(p.root.children[0].fields == std::vector<std::string>{"number"});
  CHECK(p.root.children[6].fields == std::vector<std::string>{"postcode"});
  CHECK(p.latent_dim == 128);
}

TEST_CASE("degenerate and alternative plans") {
  const ModelPlan scalars = compile(parse_schema("message S { optional float a = 1; optional float b = 2; }"), 32,
                                    ModelVariant::tuple);
  REQUIRE(scalars.arity() == 1);
  CHECK(scalars.root.children[0].kind == ModuleKind::scalar_tuple);

  const ModelPlan text = compile(parse_schema(kAddressSchemaText), 128, ModelVariant::text_concat,
                                 {"unit", "district", "region"});
  CHECK(text.latent_dim == 256);
  CHECK(text.root.kind == ModuleKind::string_literal);
  CHECK(text.text_fields == std::vector<std::string>{"number", "street", "city", "postcode"});

  const ModelPlan pass = compile(parse_schema(kAddressSchemaText), 128, ModelVariant::pass_through,
                                 {"unit", "district", "region"});
  CHECK(pass.root.kind == ModuleKind::simple_tuple);
  REQUIRE(pass.arity() == 5);
  std::vector<std::string> ids;
  for (const auto& c : pass.root.children) ids.push_back(c.module_id);
  CHECK(ids == std::vector<std::string>{"string_number", "string_street", "string_city", "string_postcode", "scalars"});
  CHECK_THROWS_AS(compile(parse_schema(kAddressSchemaText), 128, ModelVariant::pass_through, {"lat"}),
                  std::invalid_argument);
}

TEST_CASE("property: compile is deterministic and scalars come last") {
  // Random schemas over a fixed name pool.
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::string src = "message R {\n";
    int tag = 1;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      src += std::string("  optional ") + (rng() % 2 ? "float" : "string") + " f" + std::to_string(i) + " = " +
             std::to_string(tag) + ";\n";
      tag += 1 + static_cast<int>(rng() % 3);
    }
    src += "}\n";
    const Schema s = parse_schema(src);
    CHECK(parse_schema(print_schema(s)) == s);
    for (auto v : {ModelVariant::tuple, ModelVariant::pass_through}) {
      const ModelPlan a = compile(s, 16, v), b = compile(s, 16, v);
      CHECK(a == b);
      const auto& kids = a.root.children;
      const auto first_scalar = std::find_if(kids.begin(), kids.end(),
                                             [](const ModuleSpec& m) { return m.kind == ModuleKind::scalar_tuple; });
      if (!s.scalar_fields().empty()) {
        CHECK(first_scalar == kids.end() - 1);
      } else {
        CHECK(first_scalar == kids.end());
      }
      CHECK(a.arity() == s.string_fields().size() + (s.scalar_fields().empty() ? 0 : 1));
    }
  }
}

TEST_CASE("shipped schema file matches the built-in address message") {
  std::ifstream in(std::string(TREEVAE_SOURCE_DIR) + "/data/address.schema");
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(parse_schema(ss.str()) == parse_schema(kAddressSchemaText));
}
