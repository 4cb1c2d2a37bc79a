#include "doctest.h"

#include "zacc/meta.hpp"

#include <fstream>

using namespace zacc;

namespace {

// Example documents from the extension proposal.
const char* kGroupExample = R"({
  "_ACCUMULATION_GROUP": {
    "latitude": {
      "_DATA_WEIGHTED": "acc_lat",
      "_WEIGHTS": "acc_wt_lat",
      "longitude": {
        "_DATA_WEIGHTED": "acc_lat_lon",
        "_WEIGHTS": "acc_wt_lat_lon",
        "time": {}
      },
      "time": {}
    },
    "longitude": {
      "_DATA_WEIGHTED": "acc_lon",
      "_WEIGHTS": "acc_wt_lon",
      "time": {}
    },
    "time": {
      "_DATA_WEIGHTED": "acc_time",
      "_WEIGHTS": "acc_wt_time"
    }
  }
})";

const std::vector<std::string> kDims = {"latitude", "longitude", "time"};

} // namespace

TEST_CASE("dataset lookups reproduce the proposal's application interface")
{
    auto attrs = GroupAttrs::from_json(json::parse(kGroupExample), &kDims);

    CHECK(lookup_dataset(attrs, {"latitude", "longitude"}, DatasetKind::weighted) ==
          "acc_lat_lon");
    CHECK(lookup_dataset(attrs, {"latitude", "longitude"}, DatasetKind::weights) ==
          "acc_wt_lat_lon");
    CHECK(lookup_dataset(attrs, {"latitude", "time"}, DatasetKind::weighted) == std::nullopt);
    CHECK(lookup_dataset(attrs, {"time"}, DatasetKind::weights) == "acc_wt_time");
    CHECK(lookup_dataset(attrs, {"time"}, DatasetKind::unweighted) == std::nullopt);
    CHECK(lookup_dataset(attrs, {"height"}, DatasetKind::weighted) == std::nullopt);
}

TEST_CASE("group attrs round-trip the proposal example unchanged")
{
    auto doc = json::parse(kGroupExample);
    auto attrs = GroupAttrs::from_json(doc, &kDims);
    CHECK(attrs.to_json() == doc);
}

TEST_CASE("nesting must follow canonical dimension order")
{
    json bad = json::parse(R"({
      "_ACCUMULATION_GROUP": {
        "time": { "latitude": {} }
      }
    })");
    CHECK_THROWS_AS(GroupAttrs::from_json(bad, &kDims), SchemaError);

    json unknown = json::parse(R"({
      "_ACCUMULATION_GROUP": { "depth": {} }
    })");
    CHECK_THROWS_AS(GroupAttrs::from_json(unknown, &kDims), SchemaError);

    // Without a dimension order the structural parse still succeeds.
    CHECK_NOTHROW(GroupAttrs::from_json(bad));
}

TEST_CASE("stride lookups")
{
    DatasetAttrs attrs{{"lat", "lon", "time"}, {1, 3, 0}};
    CHECK(lookup_stride(attrs, "lon") == 3);
    CHECK(lookup_stride(attrs, "time") == 0);
    CHECK(lookup_stride(attrs, "lat") == 1);
    CHECK_THROWS_AS(lookup_stride(attrs, "depth"), BoundsError);
}

TEST_CASE("dataset attrs round-trip both proposal stride examples")
{
    json time_only = {{"_ARRAY_DIMENSIONS", {"latitude", "longitude", "time"}},
                      {"_ACCUMULATION_STRIDE", {0, 0, 2}}};
    auto a = DatasetAttrs::from_json(time_only);
    CHECK(a.to_json() == time_only);
    CHECK(lookup_stride(a, "time") == 2);

    json lat_lon = {{"_ARRAY_DIMENSIONS", {"latitude", "longitude", "time"}},
                    {"_ACCUMULATION_STRIDE", {1, 3, 0}}};
    auto b = DatasetAttrs::from_json(lat_lon);
    CHECK(b.to_json() == lat_lon);
}

TEST_CASE("schema validation of the group document")
{
    CHECK(validate(json::parse(kGroupExample), SchemaKind::group).empty());

    auto no_root = validate(json::object(), SchemaKind::group);
    REQUIRE(no_root.size() == 1);
    CHECK(no_root[0].find("_ACCUMULATION_GROUP") != std::string::npos);

    json bad_entry = json::parse(R"({
      "_ACCUMULATION_GROUP": { "latitude": { "_DATA_WEIGHTED": 42 } }
    })");
    CHECK(!validate(bad_entry, SchemaKind::group).empty());

    json bad_node = json::parse(R"({
      "_ACCUMULATION_GROUP": { "latitude": "acc_lat" }
    })");
    CHECK(!validate(bad_node, SchemaKind::group).empty());
}

TEST_CASE("schema validation of dataset attributes")
{
    json good = {{"_ARRAY_DIMENSIONS", {"latitude", "longitude", "time"}},
                 {"_ACCUMULATION_STRIDE", {0, 0, 2}}};
    CHECK(validate(good, SchemaKind::dataset).empty());

    json negative = {{"_ARRAY_DIMENSIONS", {"a", "b", "c"}},
                     {"_ACCUMULATION_STRIDE", {-1, 0, 1}}};
    CHECK(!validate(negative, SchemaKind::dataset).empty());

    json mismatch = {{"_ARRAY_DIMENSIONS", {"a", "b", "c"}},
                     {"_ACCUMULATION_STRIDE", {1, 2}}};
    CHECK(!validate(mismatch, SchemaKind::dataset).empty());

    json missing = {{"_ARRAY_DIMENSIONS", {"a"}}};
    CHECK(!validate(missing, SchemaKind::dataset).empty());

    json not_int = {{"_ARRAY_DIMENSIONS", {"a"}}, {"_ACCUMULATION_STRIDE", {1.5}}};
    CHECK(!validate(not_int, SchemaKind::dataset).empty());

    CHECK_THROWS_AS(DatasetAttrs::from_json(mismatch), SchemaError);

    json all_zero = {{"_ARRAY_DIMENSIONS", {"a", "b"}}, {"_ACCUMULATION_STRIDE", {0, 0}}};
    CHECK(validate(all_zero, SchemaKind::dataset).empty()); // schema allows it
    CHECK_THROWS_AS(DatasetAttrs::from_json(all_zero), SchemaError); // model rejects
}

TEST_CASE("typed model and schema agree")
{
    auto attrs = GroupAttrs::from_json(json::parse(kGroupExample), &kDims);
    CHECK(validate(attrs.to_json(), SchemaKind::group).empty());

    DatasetAttrs ds{{"x", "y"}, {2, 0}};
    CHECK(validate(ds.to_json(), SchemaKind::dataset).empty());
}

TEST_CASE("shipped schema fixtures stay in sync with the validator")
{
    for (auto kind : {SchemaKind::group, SchemaKind::dataset}) {
        std::ifstream f(std::string(ZACC_SCHEMA_DIR) + "/" + schema_fixture_name(kind));
        REQUIRE(f.is_open());
        json schema = json::parse(f);
        CHECK(schema.at("$schema") == "http://json-schema.org/draft-07/schema#");
        if (kind == SchemaKind::group) {
            CHECK(schema.at("required") == json::array({"_ACCUMULATION_GROUP"}));
            auto props = schema.at("definitions").at("accumulation_data_array").at("properties");
            CHECK(props.contains(kDataUnweighted));
            CHECK(props.contains(kDataWeighted));
            CHECK(props.contains(kWeights));
        } else {
            CHECK(schema.at("required") ==
                  json::array({kArrayDimensions, kAccumulationStride}));
        }
    }
}
