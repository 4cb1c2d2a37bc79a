#include "doctest.h"

#include "zacc/array.hpp"
#include "zacc/store.hpp"

#include <filesystem>
#include <random>
#include <thread>

using namespace zacc;

namespace {

ArrayMeta meta_2d(DType t = DType::f64, Codec c = Codec::none)
{
    ArrayMeta m;
    m.shape = {50, 10};
    m.chunks = {36, 10};
    m.dtype = t;
    m.fill_value = 0.0;
    m.codec = c;
    return m;
}

std::vector<double> iota_block(std::int64_t n, double offset = 0.0)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = offset + double(i);
    return out;
}

} // namespace

TEST_CASE("zarray document round-trips bit-exactly")
{
    ArrayMeta m = meta_2d(DType::f32, Codec::deflate);
    m.fill_value = -9999.0;
    auto doc = m.to_zarray();
    auto back = ArrayMeta::from_zarray(doc);
    CHECK(back.to_zarray().dump() == doc.dump());
    CHECK(back.shape == m.shape);
    CHECK(back.dtype == DType::f32);
    CHECK(back.codec == Codec::deflate);

    CHECK_THROWS_AS(ArrayMeta::from_zarray(json{{"shape", {4}}}), FormatError);
}

TEST_CASE("chunk write/read round-trip")
{
    MemoryStore store;
    auto arr = Array::create(store, "v", meta_2d());

    auto block = iota_block(36 * 10);
    arr.write_chunk_f64({0, 0}, block);
    CHECK(arr.read_chunk_f64({0, 0}) == block);

    // Absent chunk with a fill value reads as all-fill.
    auto fill_block = arr.read_chunk_f64({1, 0});
    CHECK(fill_block.size() == 36 * 10);
    for (double v : fill_block) CHECK(v == 0.0);

    // Overwrite: last write wins.
    auto block2 = iota_block(36 * 10, 100.0);
    arr.write_chunk_f64({0, 0}, block2);
    CHECK(arr.read_chunk_f64({0, 0}) == block2);
}

TEST_CASE("edge chunks are trimmed on write and padded on read")
{
    MemoryStore store;
    auto arr = Array::create(store, "v", meta_2d());

    // 50 elements with chunk 36: the edge chunk holds 14 valid rows.
    CHECK(arr.chunk_extent({1, 0}) == Shape{14, 10});

    auto edge = iota_block(14 * 10, 1.0);
    arr.write_chunk_f64({1, 0}, edge);
    auto back = arr.read_chunk_f64({1, 0});
    REQUIRE(back.size() == 36 * 10);
    for (std::int64_t i = 0; i < 14 * 10; ++i) CHECK(back[std::size_t(i)] == edge[std::size_t(i)]);
    for (std::int64_t i = 14 * 10; i < 36 * 10; ++i) CHECK(back[std::size_t(i)] == 0.0);

    CHECK_THROWS_AS(arr.write_chunk_f64({1, 0}, iota_block(36 * 10)), BoundsError);
}

TEST_CASE("absent chunk without a fill value is a data error")
{
    MemoryStore store;
    auto m = meta_2d();
    m.fill_value = nullptr;
    auto arr = Array::create(store, "v", m);
    CHECK_THROWS_AS(arr.read_chunk_f64({0, 0}), DataError);
}

TEST_CASE("all dtypes and codecs round-trip element-identically")
{
    std::mt19937_64 rng(3);
    for (auto dtype : {DType::f32, DType::f64, DType::i32, DType::i64}) {
        for (auto codec : {Codec::none, Codec::deflate}) {
            MemoryStore store;
            ArrayMeta m;
            m.shape = {7, 11};
            m.chunks = {4, 5};
            m.dtype = dtype;
            m.fill_value = 0.0;
            m.codec = codec;
            auto arr = Array::create(store, "v", m);

            std::vector<std::vector<double>> written;
            for (std::int64_t ci = 0; ci < 2; ++ci) {
                for (std::int64_t cj = 0; cj < 3; ++cj) {
                    auto extent = arr.chunk_extent({ci, cj});
                    std::vector<double> block(std::size_t(product(extent)));
                    for (auto& v : block) v = double(std::int64_t(rng() % 1000));
                    arr.write_chunk_f64({ci, cj}, block);
                    written.push_back(block);
                }
            }
            auto reopened = Array::open(store, "v");
            std::size_t k = 0;
            for (std::int64_t ci = 0; ci < 2; ++ci) {
                for (std::int64_t cj = 0; cj < 3; ++cj) {
                    auto extent = reopened.chunk_extent({ci, cj});
                    auto full = reopened.read_chunk_f64({ci, cj});
                    // Compare the valid region only.
                    std::size_t pos = 0;
                    for (std::int64_t i = 0; i < extent[0]; ++i)
                        for (std::int64_t j = 0; j < extent[1]; ++j)
                            CHECK(full[std::size_t(i * m.chunks[1] + j)] == written[k][pos++]);
                    ++k;
                }
            }
        }
    }
}

TEST_CASE("deflate is deterministic and decodes exactly")
{
    std::string payload(4096, '\0');
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = char(i % 251);
    auto a = deflate_bytes(payload, 6);
    auto b = deflate_bytes(payload, 6);
    CHECK(a == b);
    CHECK(inflate_bytes(a, payload.size()) == payload);
    CHECK_THROWS_AS(inflate_bytes("garbage", 64), FormatError);
}

TEST_CASE("attribute documents")
{
    MemoryStore store;

    // The accumulation-group example document of the extension proposal.
    json group = json::parse(R"({
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
    })");
    write_attrs(store, "g", group);
    CHECK(read_attrs(store, "g") == group);

    // Empty attributes read as {}.
    CHECK(read_attrs(store, "missing") == json::object());

    json strides = {{"_ARRAY_DIMENSIONS", {"latitude", "longitude", "time"}},
                    {"_ACCUMULATION_STRIDE", {0, 0, 2}}};
    write_attrs(store, "d", strides);
    CHECK(read_attrs(store, "d") == strides);

    // The proposal spells both ".zattr" and ".zattrs"; reads accept both.
    store.put("legacy/.zattr", R"({"a": 1})");
    CHECK(read_attrs(store, "legacy") == json{{"a", 1}});

    store.put("bad/.zattrs", "{not json");
    CHECK_THROWS_AS(read_attrs(store, "bad"), FormatError);
}

TEST_CASE("fetch counter counts chunk payload reads only")
{
    MemoryStore store;
    auto arr = Array::create(store, "v", meta_2d());
    arr.write_chunk_f64({0, 0}, iota_block(36 * 10));
    store.counter().reset();

    (void)arr.read_chunk_f64({0, 0});
    (void)arr.read_chunk_f64({0, 0});
    (void)arr.read_chunk_f64({1, 0}); // absent: synthesized from fill, no fetch
    (void)read_attrs(store, "v");

    auto stats = store.counter().snapshot();
    CHECK(stats.chunk_reads == 2);
    CHECK(stats.bytes_read == 2 * 36 * 10 * 8);

    store.counter().reset();
    CHECK(store.counter().snapshot().chunk_reads == 0);
}

TEST_CASE("file store matches the directory layout")
{
    namespace fs = std::filesystem;
    auto root = fs::temp_directory_path() / "zacc_store_test";
    fs::remove_all(root);
    {
        FileStore store(root);
        write_group_marker(store, "");
        auto arr = Array::create(store, "v", meta_2d());
        arr.write_chunk_f64({0, 0}, iota_block(36 * 10));
        arr.write_chunk_f64({1, 0}, iota_block(14 * 10));
        write_attrs(store, "v", json{{"_ARRAY_DIMENSIONS", {"a", "b"}}});

        CHECK(fs::exists(root / ".zgroup"));
        CHECK(fs::exists(root / "v" / ".zarray"));
        CHECK(fs::exists(root / "v" / ".zattrs"));
        CHECK(fs::exists(root / "v" / "0.0"));
        CHECK(fs::exists(root / "v" / "1.0"));

        auto keys = store.list("v/");
        CHECK(keys == std::vector<std::string>{"v/.zarray", "v/.zattrs", "v/0.0", "v/1.0"});
    }
    {
        FileStore store(root, false);
        auto arr = Array::open(store, "v");
        CHECK(arr.read_chunk_f64({0, 0}) == iota_block(36 * 10));
    }
    fs::remove_all(root);
}

TEST_CASE("concurrent readers see consistent chunks")
{
    MemoryStore store;
    auto arr = Array::create(store, "v", meta_2d());
    auto block = iota_block(36 * 10);
    arr.write_chunk_f64({0, 0}, block);

    std::atomic<int> failures{0};
    auto reader = [&] {
        for (int i = 0; i < 50; ++i)
            if (arr.read_chunk_f64({0, 0}) != block) ++failures;
    };
    std::thread a(reader), b(reader);
    a.join();
    b.join();
    CHECK(failures == 0);
    CHECK(store.counter().snapshot().chunk_reads == 100);
}
