// Command-line front end: synthetic stores, accumulation generation,
// aggregation queries, store validation and scaling benchmarks over a
// chunked-array directory store.

#include "zacc/accumulate.hpp"
#include "zacc/grid.hpp"
#include "zacc/meta.hpp"
#include "zacc/oracle.hpp"
#include "zacc/query.hpp"
#include "zacc/store.hpp"
#include "zacc/synth.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <algorithm>

using namespace zacc;

namespace {

// ============================================================================
// JSON config files: {"option": value} defaults for the active subcommand
// ============================================================================

// Config-derived tokens are spliced in right after the subcommand name, so
// explicit command-line flags always win (options take the last value).
std::vector<std::string> expand_config_args(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    std::size_t subcommand = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i].rfind("-", 0) != 0) {
            subcommand = i;
            break;
        }
    }

    std::string path;
    for (std::size_t i = subcommand; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream f(path);
    if (!f.is_open()) throw zacc::DataError("cannot open config file: " + path);
    json j = json::parse(f, nullptr, true, true);
    if (!j.is_object()) throw zacc::CapabilityError("config file must hold a JSON object");

    std::vector<std::string> injected;
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back("--" + key);
        } else if (value.is_string()) {
            injected.push_back("--" + key + "=" + value.get<std::string>());
        } else {
            injected.push_back("--" + key + "=" + value.dump());
        }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(subcommand) + 1,
                injected.begin(), injected.end());
    return args;
}

// ============================================================================
// Flag parsing helpers
// ============================================================================

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (begin <= s.size()) {
        auto end = s.find(sep, begin);
        if (end == std::string::npos) {
            if (begin < s.size()) out.push_back(s.substr(begin));
            break;
        }
        out.push_back(s.substr(begin, end - begin));
        begin = end + 1;
    }
    return out;
}

Shape parse_shape(const std::string& s)
{
    Shape out;
    for (const auto& part : split(s, ',')) out.push_back(std::stoll(part));
    return out;
}

// "lat,lon,time,lat+lon" -> list of dimension-name subsets
std::vector<std::vector<std::string>> parse_subsets(const std::string& s)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& part : split(s, ',')) out.push_back(split(part, '+'));
    return out;
}

// "lat=2,lon=2,time=2"
Shape parse_stride(const ChunkGrid& grid, const std::string& s)
{
    Shape stride(grid.ndim(), 1);
    for (const auto& part : split(s, ',')) {
        auto kv = split(part, '=');
        if (kv.size() != 2) throw CapabilityError("bad --stride entry: " + part);
        stride[grid.axis(kv[0])] = std::stoll(kv[1]);
    }
    return stride;
}

// "lat=0:360,lon=10:20"
std::map<std::string, IndexRange> parse_bounds(const std::string& s)
{
    std::map<std::string, IndexRange> out;
    if (s.empty()) return out;
    for (const auto& part : split(s, ',')) {
        auto kv = split(part, '=');
        if (kv.size() != 2) throw CapabilityError("bad --bounds entry: " + part);
        auto range = split(kv[1], ':');
        if (range.size() != 2) throw CapabilityError("bad --bounds range: " + part);
        out[kv[0]] = IndexRange{std::stoll(range[0]), std::stoll(range[1])};
    }
    return out;
}

// "lat=weights_lat,lon=weights_lon"
WeightSource parse_weights(const ChunkGrid& grid, const std::string& vectors,
                           const std::string& full)
{
    if (!full.empty()) return WeightSource::full_array(full);
    if (vectors.empty()) return WeightSource::unit();
    std::map<std::size_t, std::string> names;
    for (const auto& part : split(vectors, ',')) {
        auto kv = split(part, '=');
        if (kv.size() != 2) throw CapabilityError("bad --weights entry: " + part);
        names[grid.axis(kv[0])] = kv[1];
    }
    return WeightSource::dim_arrays(names);
}

VariantSet parse_variants(const std::string& s)
{
    if (s == "all") return {true, true, true};
    if (s == "w") return {false, true, true};
    if (s == "uw") return {true, false, false};
    throw CapabilityError("--variants must be one of: all, w, uw");
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FileStore open_store(const std::string& path)
{
    if (!std::filesystem::is_directory(path))
        throw CapabilityError("store directory not found: " + path);
    return FileStore(path, false);
}

std::ostream& open_output(std::ofstream& file, const std::string& path)
{
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file.is_open()) throw DataError("cannot open output file: " + path);
    return file;
}

void print_result_csv(std::ostream& os, const ChunkGrid& grid, const AggregateResult& r)
{
    for (std::size_t k = 0; k < r.kept_axes.size(); ++k)
        os << grid.dim_names()[r.kept_axes[k]] << ",";
    os << "average,data_sum,weight_sum\n";
    char buf[96];
    Index lo(r.kept_axes.size()), hi(r.kept_axes.size());
    for (std::size_t k = 0; k < r.kept_axes.size(); ++k) {
        lo[k] = r.kept_bounds[k].start;
        hi[k] = r.kept_bounds[k].end;
    }
    std::size_t cell = 0;
    for_each_index(lo, hi, [&](const Index& kept) {
        for (std::size_t k = 0; k < kept.size(); ++k) os << kept[k] << ",";
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", r.average[cell], r.data_sum[cell],
                      r.weight_sum[cell]);
        os << buf << "\n";
        ++cell;
    });
}

double max_rel_err(const AggregateResult& a, const AggregateResult& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.average.size(); ++i) {
        if (b.weight_sum[i] <= 0.0) continue;
        const double scale =
            std::max({std::fabs(a.average[i]), std::fabs(b.average[i]), 1e-300});
        worst = std::max(worst, std::fabs(a.average[i] - b.average[i]) / scale);
    }
    return worst;
}

// ============================================================================
// Subcommands
// ============================================================================

struct SynthArgs {
    std::string out, var = "data", dims = "lat,lon,time", dtype = "f32", codec = "none";
    std::string shape, chunks;
    double fill = -9999.0, gap_fraction = 0.0;
    std::uint64_t seed = 0;
    bool no_weights = false;
};

int run_synth(const SynthArgs& a)
{
    SynthConfig cfg;
    cfg.var = a.var;
    cfg.dims = split(a.dims, ',');
    cfg.shape = parse_shape(a.shape);
    cfg.chunks = parse_shape(a.chunks);
    cfg.dtype = dtype_from_name(a.dtype);
    cfg.fill = a.fill;
    cfg.codec = a.codec == "deflate" ? Codec::deflate : Codec::none;
    cfg.seed = a.seed;
    cfg.gap_fraction = a.gap_fraction;
    cfg.with_weights = !a.no_weights;

    FileStore store(a.out);
    synth(store, cfg);
    std::cout << "store=" << a.out << " var=" << cfg.var << " elements=" << product(cfg.shape)
              << " seed=" << cfg.seed << " gap_fraction=" << cfg.gap_fraction << "\n";
    return 0;
}

struct GenerateArgs {
    std::string store, var = "data", subsets, stride, variants = "all";
    std::string weights, weights_full, codec, acc_chunks;
};

int run_generate(const GenerateArgs& a)
{
    FileStore store = open_store(a.store);
    auto grid = grid_of(store, a.var);

    AccumulationSpec spec;
    for (const auto& names : parse_subsets(a.subsets))
        spec.subsets.push_back(DimSubset::of(grid, names));
    spec.stride = parse_stride(grid, a.stride);
    spec.variants = parse_variants(a.variants);
    if (!a.codec.empty())
        spec.codec = a.codec == "deflate" ? Codec::deflate : Codec::none;
    if (!a.acc_chunks.empty()) spec.acc_chunks = parse_shape(a.acc_chunks);

    const auto t0 = std::chrono::steady_clock::now();
    auto p = generate(store, a.var, spec, parse_weights(grid, a.weights, a.weights_full));
    const auto acct = account_storage(store, a.var);

    std::cout << "group=" << p.group << " datasets=" << p.datasets.size()
              << " acc_elements=" << p.element_count() << " seconds=" << seconds_since(t0)
              << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "uncompressed_ratio=%.6f stored_ratio=%.6f\n",
                  acct.uncompressed_ratio(), acct.stored_ratio());
    std::cout << buf;
    return 0;
}

struct QueryArgs {
    std::string store, var = "data", op = "box", dims, bounds, time_dim = "time";
    std::string weighting = "uw", weights, weights_full, out;
    bool stats = false;
};

int run_query(const QueryArgs& a)
{
    FileStore store = open_store(a.store);
    auto grid = grid_of(store, a.var);
    auto wsrc = parse_weights(grid, a.weights, a.weights_full);
    QueryEngine engine(store, a.var, wsrc);

    const auto mode = a.weighting == "w" ? Weighting::weighted : Weighting::unweighted;
    auto bounds = parse_bounds(a.bounds);

    const auto t0 = std::chrono::steady_clock::now();
    AggregateResult r;
    if (a.op == "series" || a.op == "map") {
        IndexRange trange{0, grid.shape()[grid.axis(a.time_dim)]};
        auto it = bounds.find(a.time_dim);
        if (it != bounds.end()) {
            trange = it->second;
            bounds.erase(it);
        }
        r = a.op == "series" ? engine.area_averaged_series(bounds, a.time_dim, trange, mode)
                             : engine.time_averaged_map(a.time_dim, trange, bounds, mode);
    } else if (a.op == "box") {
        if (a.dims.empty()) throw CapabilityError("--op box requires --dims");
        RegionQuery q;
        q.agg_dims = DimSubset::of(grid, split(a.dims, ','));
        q.weighting = mode;
        std::map<std::size_t, IndexRange> kept;
        for (const auto& [name, range] : bounds) {
            const auto axis = grid.axis(name);
            if (!q.agg_dims.contains(axis)) kept[axis] = range;
        }
        for (auto axis : q.agg_dims.axes()) {
            auto it = bounds.find(grid.dim_names()[axis]);
            q.bounds.push_back(it != bounds.end() ? it->second
                                                  : IndexRange{0, grid.shape()[axis]});
        }
        r = engine.region_aggregate(q, kept);
    } else {
        throw CapabilityError("--op must be one of: box, series, map");
    }
    const double elapsed = seconds_since(t0);

    std::ofstream file;
    print_result_csv(open_output(file, a.out), grid, r);
    if (a.stats)
        std::cerr << "chunk_reads=" << r.fetch.chunk_reads << " bytes_read=" << r.fetch.bytes_read
                  << " cells=" << r.average.size() << " zero_weight_cells=" << r.zero_weight_cells
                  << " seconds=" << elapsed << "\n";
    return 0;
}

struct ValidateArgs {
    std::string file, schema;
    std::string store, var = "data", weights, weights_full;
    int trials = 20;
    std::uint64_t seed = 0;
};

int validate_document(const std::string& path, const std::string& schema)
{
    std::ifstream f(path);
    if (!f.is_open()) throw DataError("cannot open " + path);
    json doc = json::parse(f, nullptr, true, true);
    const auto kind = schema == "group" ? SchemaKind::group : SchemaKind::dataset;
    auto violations = validate(doc, kind);
    for (const auto& v : violations) std::cout << "violation: " << v << "\n";
    std::cout << "document=" << path << " schema=" << schema
              << " violations=" << violations.size() << "\n";
    return violations.empty() ? 0 : 2;
}

int validate_store(const ValidateArgs& a)
{
    FileStore store = open_store(a.store);
    auto grid = grid_of(store, a.var);

    // Metadata conformance first.
    const std::string group = a.var + "_accumulation_group";
    std::size_t violations = 0;
    auto group_doc = read_attrs(store, group);
    for (const auto& v : validate(group_doc, SchemaKind::group)) {
        std::cout << "violation: " << group << ": " << v << "\n";
        ++violations;
    }
    auto dims = grid.dim_names();
    auto attrs = GroupAttrs::from_json(group_doc, &dims);
    for (const auto& key : store.list(group + "/")) {
        const std::string suffix = "/.zattrs";
        if (key.size() <= suffix.size() ||
            key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        auto node = key.substr(0, key.size() - suffix.size());
        if (node == group) continue;
        for (const auto& v : validate(read_attrs(store, node), SchemaKind::dataset)) {
            std::cout << "violation: " << node << ": " << v << "\n";
            ++violations;
        }
    }
    if (violations > 0) {
        std::cout << "metadata_violations=" << violations << "\n";
        return 2;
    }

    auto wsrc = parse_weights(grid, a.weights, a.weights_full);
    QueryEngine engine(store, a.var, wsrc);
    BruteEngine brute(store, a.var, wsrc);

    auto raw = Array::open(store, a.var);
    const double tol = raw.meta().dtype == DType::f32 ? 1e-6 : 1e-12;

    // Aggregations are drawn from what the store can actually answer: every
    // non-empty subset of the aggregation set needs its datasets.
    auto usable = [&](const DimSubset& agg, Weighting mode) {
        for (const auto& sub : subset_lattice(agg)) {
            if (sub.empty()) continue;
            const auto names = sub.names(grid);
            if (mode == Weighting::weighted) {
                if (!lookup_dataset(attrs, names, DatasetKind::weighted) ||
                    !lookup_dataset(attrs, names, DatasetKind::weights))
                    return false;
            } else if (!lookup_dataset(attrs, names, DatasetKind::unweighted)) {
                return false;
            }
        }
        return true;
    };
    std::vector<std::size_t> all_axes(grid.ndim());
    for (std::size_t d = 0; d < grid.ndim(); ++d) all_axes[d] = d;
    std::map<int, std::vector<DimSubset>> candidates; // keyed by mode
    for (auto mode : {Weighting::unweighted, Weighting::weighted}) {
        for (const auto& agg : subset_lattice(DimSubset::of_axes(all_axes)))
            if (!agg.empty() && usable(agg, mode))
                candidates[static_cast<int>(mode)].push_back(agg);
    }
    if (candidates[0].empty() && candidates[1].empty())
        throw CapabilityError("store provides no complete aggregation subsets");

    std::mt19937_64 rng(a.seed);
    auto random_range = [&](std::size_t axis) {
        const auto n = std::uint64_t(grid.shape()[axis]);
        std::int64_t x = std::int64_t(rng() % n), y = std::int64_t(rng() % n);
        return IndexRange{std::min(x, y), std::max(x, y) + 1};
    };

    double worst = 0.0, worst_nrmsd = 0.0;
    for (int t = 0; t < a.trials; ++t) {
        auto mode = t % 2 == 1 ? Weighting::weighted : Weighting::unweighted;
        if (candidates[static_cast<int>(mode)].empty())
            mode = mode == Weighting::weighted ? Weighting::unweighted : Weighting::weighted;
        const auto& pool = candidates[static_cast<int>(mode)];
        const auto& agg = pool[rng() % pool.size()];

        RegionQuery q;
        q.agg_dims = agg;
        q.weighting = mode;
        for (auto axis : agg.axes()) q.bounds.push_back(random_range(axis));
        std::map<std::size_t, IndexRange> kept;
        for (std::size_t d = 0; d < grid.ndim(); ++d)
            if (!agg.contains(d) && rng() % 2) kept[d] = random_range(d);

        auto got = engine.region_aggregate(q, kept);
        auto want = brute.region_aggregate(q, kept);
        const double err = max_rel_err(got, want);
        worst = std::max(worst, err);
        std::string dims;
        for (auto axis : agg.axes()) {
            if (!dims.empty()) dims += "+";
            dims += grid.dim_names()[axis];
        }
        char buf[192];
        std::snprintf(buf, sizeof buf, "trial=%d dims=%s mode=%s max_rel_err=%.3e", t,
                      dims.c_str(), mode == Weighting::weighted ? "w" : "uw", err);
        std::cout << buf;
        if (got.average.size() > 1) {
            auto r = nrmsd(want.average, got.average);
            if (r.defined) {
                worst_nrmsd = std::max(worst_nrmsd, r.nrmsd);
                std::snprintf(buf, sizeof buf, " nrmsd=%.3e", r.nrmsd);
                std::cout << buf;
            }
        }
        std::cout << "\n";
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "trials=%d worst_rel_err=%.3e worst_nrmsd=%.3e tolerance=%.0e\n", a.trials,
                  worst, worst_nrmsd, tol);
    std::cout << buf;
    return worst <= tol ? 0 : 2;
}

struct InspectArgs {
    std::string store, var = "data";
};

int run_inspect(const InspectArgs& a)
{
    FileStore store = open_store(a.store);
    auto grid = grid_of(store, a.var);

    std::cout << "var=" << a.var << " dims=";
    for (std::size_t d = 0; d < grid.ndim(); ++d)
        std::cout << (d ? "," : "") << grid.dim_names()[d];
    std::cout << " shape=";
    for (std::size_t d = 0; d < grid.ndim(); ++d)
        std::cout << (d ? "x" : "") << grid.shape()[d];
    std::cout << " chunks=";
    for (std::size_t d = 0; d < grid.ndim(); ++d)
        std::cout << (d ? "x" : "") << grid.chunk_shape()[d];
    std::cout << "\n";

    const std::string group = a.var + "_accumulation_group";
    if (!store.contains(group + "/.zattrs")) {
        std::cout << "accumulation_group=absent\n";
        return 0;
    }
    for (const auto& key : store.list(group + "/")) {
        const std::string suffix = "/.zarray";
        if (key.size() <= suffix.size() ||
            key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        auto name = key.substr(0, key.size() - suffix.size());
        auto arr = Array::open(store, name);
        auto ds = DatasetAttrs::from_json(read_attrs(store, name));
        std::cout << "dataset=" << name.substr(group.size() + 1) << " shape=";
        for (std::size_t d = 0; d < arr.meta().shape.size(); ++d)
            std::cout << (d ? "x" : "") << arr.meta().shape[d];
        std::cout << " stride=";
        for (std::size_t d = 0; d < ds.stride.size(); ++d)
            std::cout << (d ? "," : "") << ds.stride[d];
        std::cout << "\n";
    }
    const auto acct = account_storage(store, a.var);
    std::cout << "raw_elements=" << acct.raw_elements
              << " raw_bytes_uncompressed=" << acct.raw_bytes_uncompressed
              << " raw_bytes_stored=" << acct.raw_bytes_stored << "\n";
    std::cout << "acc_elements=" << acct.acc_elements
              << " acc_bytes_uncompressed=" << acct.acc_bytes_uncompressed
              << " acc_bytes_stored=" << acct.acc_bytes_stored << "\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "uncompressed_ratio=%.6f stored_ratio=%.6f\n",
                  acct.uncompressed_ratio(), acct.stored_ratio());
    std::cout << buf;
    return 0;
}

struct BenchArgs {
    std::string store, var = "data", op = "map", time_dim = "time", sweep;
    std::string weighting = "uw", weights, weights_full;
    std::int64_t brute_ceiling = std::int64_t{1} << 32;
};

int run_bench(const BenchArgs& a)
{
    FileStore store = open_store(a.store);
    auto grid = grid_of(store, a.var);
    auto wsrc = parse_weights(grid, a.weights, a.weights_full);
    QueryEngine engine(store, a.var, wsrc); // raises "run generate" when absent
    BruteEngine brute(store, a.var, wsrc);
    brute.set_element_ceiling(a.brute_ceiling);

    const auto mode = a.weighting == "w" ? Weighting::weighted : Weighting::unweighted;
    auto sweep = parse_shape(a.sweep);
    for (std::size_t i = 1; i < sweep.size(); ++i)
        if (sweep[i] <= sweep[i - 1])
            throw CapabilityError("--sweep values must be ascending");

    std::int64_t kept_volume = 1;
    for (std::size_t d = 0; d + 1 < grid.ndim(); ++d) kept_volume *= grid.shape()[d];

    std::cout << "slices,acc_seconds,brute_seconds,acc_chunk_reads,brute_chunk_reads,nrmsd\n";
    for (auto slices : sweep) {
        const IndexRange trange{0, slices};
        auto invoke = [&](auto& eng) {
            if (a.op == "series")
                return eng.area_averaged_series({}, a.time_dim, trange, mode);
            return eng.time_averaged_map(a.time_dim, trange, {}, mode);
        };

        const auto t0 = std::chrono::steady_clock::now();
        auto acc = invoke(engine);
        const double acc_s = seconds_since(t0);

        char buf[192];
        if (slices * kept_volume <= a.brute_ceiling) {
            const auto t1 = std::chrono::steady_clock::now();
            auto ref = invoke(brute);
            const double brute_s = seconds_since(t1);
            auto r = nrmsd(ref.average, acc.average);
            std::snprintf(buf, sizeof buf, "%lld,%.4f,%.4f,%llu,%llu,%.3e",
                          static_cast<long long>(slices), acc_s, brute_s,
                          static_cast<unsigned long long>(acc.fetch.chunk_reads),
                          static_cast<unsigned long long>(ref.fetch.chunk_reads),
                          r.defined ? r.nrmsd : 0.0);
        } else {
            std::snprintf(buf, sizeof buf, "%lld,%.4f,skipped,%llu,skipped,",
                          static_cast<long long>(slices), acc_s,
                          static_cast<unsigned long long>(acc.fetch.chunk_reads));
        }
        std::cout << buf << "\n";
    }
    return 0;
}

} // namespace

// ============================================================================
// main
// ============================================================================

int main(int argc, char** argv)
{
    CLI::App app{"chunk-level cumulative-sum datasets for fast region aggregation", "zacc"};
    app.require_subcommand(1);

    std::string config_path; // consumed by expand_config_args before parsing
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file with long-option defaults");
    };

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "build a reproducible synthetic store");
    add_config(synth_cmd);
    synth_cmd->add_option("--out", sa.out, "store directory")->required();
    synth_cmd->add_option("--var", sa.var, "variable name");
    synth_cmd->add_option("--dims", sa.dims, "dimension names, comma separated");
    synth_cmd->add_option("--shape", sa.shape, "array shape, comma separated")->required();
    synth_cmd->add_option("--chunks", sa.chunks, "chunk shape, comma separated")->required();
    synth_cmd->add_option("--dtype", sa.dtype, "f32|f64|i32|i64");
    synth_cmd->add_option("--fill", sa.fill, "fill value");
    synth_cmd->add_option("--codec", sa.codec, "none|deflate");
    synth_cmd->add_option("--seed", sa.seed, "PRNG seed");
    synth_cmd->add_option("--gap-fraction", sa.gap_fraction, "fill-value share, 0..1");
    synth_cmd->add_flag("--no-weights", sa.no_weights, "skip the weight vector");

    GenerateArgs ga;
    auto* gen_cmd = app.add_subcommand("generate", "generate accumulation datasets");
    add_config(gen_cmd);
    gen_cmd->add_option("--store", ga.store, "store directory")->required();
    gen_cmd->add_option("--var", ga.var, "variable name");
    gen_cmd->add_option("--subsets", ga.subsets, "e.g. lat,lon,time,lat+lon")->required();
    gen_cmd->add_option("--stride", ga.stride, "e.g. lat=2,lon=2,time=2")->required();
    gen_cmd->add_option("--variants", ga.variants, "all|w|uw");
    gen_cmd->add_option("--weights", ga.weights, "per-dim weight arrays, dim=array,...");
    gen_cmd->add_option("--weights-full", ga.weights_full, "full-shape weight array");
    gen_cmd->add_option("--codec", ga.codec, "none|deflate (default: raw codec)");
    gen_cmd->add_option("--acc-chunks", ga.acc_chunks, "per-dim accumulation chunk cap");

    QueryArgs qa;
    auto* query_cmd = app.add_subcommand("query", "aggregate a region");
    add_config(query_cmd);
    query_cmd->add_option("--store", qa.store, "store directory")->required();
    query_cmd->add_option("--var", qa.var, "variable name");
    query_cmd->add_option("--op", qa.op, "box|series|map");
    query_cmd->add_option("--dims", qa.dims, "aggregated dims for --op box");
    query_cmd->add_option("--bounds", qa.bounds, "dim=a:b,... (half-open)");
    query_cmd->add_option("--time-dim", qa.time_dim, "time dimension name");
    query_cmd->add_option("--weighting", qa.weighting, "w|uw");
    query_cmd->add_option("--weights", qa.weights, "per-dim weight arrays");
    query_cmd->add_option("--weights-full", qa.weights_full, "full-shape weight array");
    query_cmd->add_option("--out", qa.out, "CSV path or - for stdout");
    query_cmd->add_flag("--stats", qa.stats, "print chunk-read stats to stderr");

    ValidateArgs va;
    auto* val_cmd = app.add_subcommand("validate",
                                       "check schema documents or store accuracy");
    add_config(val_cmd);
    val_cmd->add_option("--file", va.file, "attribute document to validate");
    val_cmd->add_option("--schema", va.schema, "group|dataset (with --file)");
    val_cmd->add_option("--store", va.store, "store directory");
    val_cmd->add_option("--var", va.var, "variable name");
    val_cmd->add_option("--trials", va.trials, "randomized trials");
    val_cmd->add_option("--seed", va.seed, "trial seed");
    val_cmd->add_option("--weights", va.weights, "per-dim weight arrays");
    val_cmd->add_option("--weights-full", va.weights_full, "full-shape weight array");

    InspectArgs ia;
    auto* ins_cmd = app.add_subcommand("inspect", "show layout and storage accounting");
    add_config(ins_cmd);
    ins_cmd->add_option("--store", ia.store, "store directory")->required();
    ins_cmd->add_option("--var", ia.var, "variable name");

    BenchArgs ba;
    auto* bench_cmd = app.add_subcommand("bench", "sweep window lengths, both engines");
    add_config(bench_cmd);
    bench_cmd->add_option("--store", ba.store, "store directory")->required();
    bench_cmd->add_option("--var", ba.var, "variable name");
    bench_cmd->add_option("--op", ba.op, "map|series");
    bench_cmd->add_option("--time-dim", ba.time_dim, "time dimension name");
    bench_cmd->add_option("--sweep", ba.sweep, "ascending slice counts")->required();
    bench_cmd->add_option("--weighting", ba.weighting, "w|uw");
    bench_cmd->add_option("--weights", ba.weights, "per-dim weight arrays");
    bench_cmd->add_option("--weights-full", ba.weights_full, "full-shape weight array");
    bench_cmd->add_option("--brute-ceiling", ba.brute_ceiling,
                          "skip brute force above this element count");

    try {
        // Config-injected tokens precede explicit flags; last value wins.
        for (CLI::App* sub : {synth_cmd, gen_cmd, query_cmd, val_cmd, ins_cmd, bench_cmd})
            for (auto* opt : sub->get_options())
                opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

        auto args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end()); // the vector overload wants reversed args
        app.parse(args);
        if (*synth_cmd) return run_synth(sa);
        if (*gen_cmd) return run_generate(ga);
        if (*query_cmd) return run_query(qa);
        if (*val_cmd) {
            if (!va.file.empty()) {
                if (va.schema != "group" && va.schema != "dataset")
                    throw CapabilityError("--file needs --schema group|dataset");
                return validate_document(va.file, va.schema);
            }
            if (va.store.empty())
                throw CapabilityError("validate needs --file or --store");
            return validate_store(va);
        }
        if (*ins_cmd) return run_inspect(ia);
        if (*bench_cmd) return run_bench(ba);
    } catch (const CLI::Success& e) {
        return app.exit(e); // --help / --version
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3; // usage problems are configuration errors
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << "\n";
        return 3;
    } catch (const BoundsError& e) {
        std::cerr << "bounds error: " << e.what() << "\n";
        return 3; // bad dimension names or index ranges in flags
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
