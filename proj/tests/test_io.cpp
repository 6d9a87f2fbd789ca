#include "breakscope/csv.hpp"
#include "breakscope/json_io.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace breakscope;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string("./bstest_") + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Just enough of JSON Schema to check the published envelope contract:
// "type", "required", and nested "properties".
bool validate_schema(const json& doc, const json& schema, std::string& err) {
  if (schema.contains("type")) {
    const std::string type = schema["type"];
    const bool ok = (type == "object" && doc.is_object()) ||
                    (type == "array" && doc.is_array()) ||
                    (type == "string" && doc.is_string()) ||
                    (type == "number" && doc.is_number()) ||
                    (type == "boolean" && doc.is_boolean());
    if (!ok) {
      err = "wrong type, expected " + type;
      return false;
    }
  }
  if (schema.contains("required"))
    for (const auto& key : schema["required"]) {
      if (!doc.contains(key.get<std::string>())) {
        err = "missing required key " + key.get<std::string>();
        return false;
      }
    }
  if (schema.contains("properties"))
    for (const auto& [key, sub] : schema["properties"].items())
      if (doc.contains(key) && !validate_schema(doc[key], sub, err)) {
        err = key + ": " + err;
        return false;
      }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("csv header detection and parsing") {
  TempFile f("header.csv");
  write_text(f.path, "y,x1\n1.5,0.25\n2.5,0.5\n-3.0,1.0\n");
  const auto data = read_csv(f.path);
  CHECK(data.had_header);
  CHECK(data.y.size() == 3);
  CHECK(data.y[2] == doctest::Approx(-3.0));
  CHECK(data.covariates(1, 0) == doctest::Approx(0.5));

  TempFile g("noheader.csv");
  write_text(g.path, "1,2\n3,4\n");
  const auto plain = read_csv(g.path);
  CHECK(!plain.had_header);
  CHECK(plain.y.size() == 2);
}

TEST_CASE("csv errors carry a row and column diagnostic") {
  TempFile f("bad.csv");
  write_text(f.path, "1,2\n3,4\n5,x7\n");
  try {
    read_csv(f.path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_csv("./does_not_exist.csv"), DataError);

  TempFile ragged("ragged.csv");
  write_text(ragged.path, "1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged.path), DataError);
}

TEST_CASE("csv to dataset honors the intercept flag") {
  TempFile f("ds.csv");
  write_text(f.path, "1.0,0.3\n2.0,0.6\n3.0,0.9\n4.0,1.2\n");
  const auto data = read_csv(f.path);
  const auto ds = dataset_from_csv(data, true);
  CHECK(ds.K() == 2);
  CHECK(ds.X()(0, 0) == 1.0);
  CHECK(ds.X()(2, 1) == doctest::Approx(0.9));

  // without the implicit intercept the first covariate must already be 1
  TempFile g("ds2.csv");
  write_text(g.path, "1.0,1,0.3\n2.0,1,0.6\n3.0,1,0.9\n");
  const auto ds2 = dataset_from_csv(read_csv(g.path), false);
  CHECK(ds2.K() == 2);
}

TEST_CASE("csv writer round-trips") {
  TempFile f("rt.csv");
  write_csv(f.path, {"a", "b"}, {{1.25, -2.5}, {3.0, 0.0625}});
  const auto back = read_csv(f.path);
  CHECK(back.had_header);
  CHECK(back.y[0] == 1.25);
  CHECK(back.covariates(1, 0) == 0.0625);
}

TEST_CASE("result envelope validates against the published schema") {
  std::ifstream schema_file(BREAKSCOPE_SOURCE_DIR "/docs/result.schema.json");
  REQUIRE(schema_file.is_open());
  const json schema = json::parse(schema_file);

  const json doc = result_envelope("detect", {{"seed", 1}},
                                   {{"runs", json::array()}}, 12);
  std::string err;
  CHECK_MESSAGE(validate_schema(doc, schema, err), err);
  CHECK(doc["schema_version"] == "1");
}

TEST_CASE("method results serialize with one-based raw dates") {
  const VectorXd y = testutil::ar1_series(120, 0.4, 1.0, 3);
  const auto ds = build_ar_dataset(y, 1);
  MethodResult res;
  res.method = Method::BSMDL;
  res.segmentation = Segmentation({60}, ds.T());
  res.score = mdl_marginal_loglik(ds, res.segmentation);
  res.runtime_ms = 5;

  const json j = method_result_json(res, ds, 1);
  CHECK(j["breaks"][0] == 61);  // effective boundary 60 + presample 1
  CHECK(j["per_segment_params"].size() == 2);
  CHECK(j["per_segment_params"][0]["start"] == 2);
  CHECK(j["per_segment_params"][1]["end"] == 120);

  // empty break set serializes as [], not null
  MethodResult none;
  none.segmentation = Segmentation::none(ds.T());
  none.score = mdl_marginal_loglik(ds, none.segmentation);
  const json j0 = method_result_json(none, ds, 1);
  CHECK(j0["breaks"].is_array());
  CHECK(j0["breaks"].empty());

  // score block round-trips through text
  const json score = score_json(res.score);
  const json parsed = json::parse(score.dump());
  CHECK(parsed["value"].get<double>() ==
        doctest::Approx(res.score.value).epsilon(1e-15));
  CHECK(parsed["per_segment"].size() == res.score.per_segment.size());
}

TEST_SUITE_END();
