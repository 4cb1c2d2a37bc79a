#include "zacc/meta.hpp"

#include <algorithm>

namespace zacc {

namespace {

bool is_reserved(const std::string& key)
{
    return key == kDataUnweighted || key == kDataWeighted || key == kWeights;
}

} // namespace

// ============================================================================
// GroupAttrs
// ============================================================================

namespace {

json node_to_json(const GroupAttrs::Node& node)
{
    json j = json::object();
    if (node.data_unweighted) j[kDataUnweighted] = *node.data_unweighted;
    if (node.data_weighted) j[kDataWeighted] = *node.data_weighted;
    if (node.weights) j[kWeights] = *node.weights;
    for (const auto& [name, child] : node.children) j[name] = node_to_json(child);
    return j;
}

GroupAttrs::Node node_from_json(const json& j, const std::string& path,
                                const std::vector<std::string>* dim_order,
                                std::size_t min_axis)
{
    if (!j.is_object())
        throw SchemaError("accumulation group node at '" + path + "' is not an object");
    GroupAttrs::Node node;
    for (const auto& [key, value] : j.items()) {
        if (is_reserved(key)) {
            if (!value.is_string())
                throw SchemaError("'" + key + "' at '" + path + "' must be a string");
            if (key == kDataUnweighted) node.data_unweighted = value.get<std::string>();
            if (key == kDataWeighted) node.data_weighted = value.get<std::string>();
            if (key == kWeights) node.weights = value.get<std::string>();
            continue;
        }
        std::size_t child_axis = min_axis;
        if (dim_order) {
            auto it = std::find(dim_order->begin(), dim_order->end(), key);
            if (it == dim_order->end())
                throw SchemaError("unknown dimension '" + key + "' at '" + path + "'");
            child_axis = static_cast<std::size_t>(it - dim_order->begin());
            if (child_axis < min_axis)
                throw SchemaError("dimension '" + key + "' at '" + path +
                                  "' violates canonical order");
        }
        node.children[key] =
            node_from_json(value, path.empty() ? key : path + "/" + key, dim_order,
                           dim_order ? child_axis + 1 : 0);
    }
    return node;
}

} // namespace

json GroupAttrs::to_json() const
{
    return json{{kAccumulationGroup, node_to_json(root)}};
}

GroupAttrs GroupAttrs::from_json(const json& doc, const std::vector<std::string>* dim_order)
{
    if (!doc.is_object() || !doc.contains(kAccumulationGroup))
        throw SchemaError("document lacks the '_ACCUMULATION_GROUP' key");
    GroupAttrs out;
    out.root = node_from_json(doc.at(kAccumulationGroup), "", dim_order, 0);
    return out;
}

std::optional<std::string> lookup_dataset(const GroupAttrs& attrs,
                                          const std::vector<std::string>& dims,
                                          DatasetKind kind)
{
    const GroupAttrs::Node* node = &attrs.root;
    for (const auto& dim : dims) {
        auto it = node->children.find(dim);
        if (it == node->children.end()) return std::nullopt;
        node = &it->second;
    }
    switch (kind) {
    case DatasetKind::unweighted: return node->data_unweighted;
    case DatasetKind::weighted: return node->data_weighted;
    case DatasetKind::weights: return node->weights;
    }
    return std::nullopt;
}

// ============================================================================
// DatasetAttrs
// ============================================================================

json DatasetAttrs::to_json() const
{
    return json{{kArrayDimensions, array_dimensions}, {kAccumulationStride, stride}};
}

DatasetAttrs DatasetAttrs::from_json(const json& doc)
{
    auto violations = validate(doc, SchemaKind::dataset);
    if (!violations.empty())
        throw SchemaError("invalid accumulation dataset attributes: " + violations.front());
    DatasetAttrs out;
    out.array_dimensions = doc.at(kArrayDimensions).get<std::vector<std::string>>();
    out.stride = doc.at(kAccumulationStride).get<std::vector<std::int64_t>>();
    if (std::none_of(out.stride.begin(), out.stride.end(),
                     [](std::int64_t s) { return s > 0; }))
        throw SchemaError("accumulation dataset needs at least one positive stride");
    return out;
}

std::int64_t lookup_stride(const DatasetAttrs& attrs, const std::string& dim)
{
    for (std::size_t i = 0; i < attrs.array_dimensions.size(); ++i)
        if (attrs.array_dimensions[i] == dim) return attrs.stride[i];
    throw BoundsError("dimension '" + dim + "' not present in _ARRAY_DIMENSIONS");
}

// ============================================================================
// Validation
// ============================================================================

namespace {

void validate_group_node(const json& j, const std::string& path,
                         std::vector<std::string>& out)
{
    if (!j.is_object()) {
        out.push_back("node at '" + path + "' must be an object");
        return;
    }
    for (const auto& [key, value] : j.items()) {
        if (is_reserved(key)) {
            if (!value.is_string())
                out.push_back("'" + key + "' at '" + path + "' must be a string");
        } else {
            validate_group_node(value, path.empty() ? key : path + "/" + key, out);
        }
    }
}

} // namespace

std::vector<std::string> validate(const json& doc, SchemaKind kind)
{
    std::vector<std::string> out;
    if (!doc.is_object()) {
        out.push_back("document must be an object");
        return out;
    }

    if (kind == SchemaKind::group) {
        if (!doc.contains(kAccumulationGroup)) {
            out.push_back("missing required key '_ACCUMULATION_GROUP'");
            return out;
        }
        validate_group_node(doc.at(kAccumulationGroup), "", out);
        return out;
    }

    // Dataset schema: both keys required, typed, equal length, strides >= 0.
    if (!doc.contains(kArrayDimensions))
        out.push_back("missing required key '_ARRAY_DIMENSIONS'");
    if (!doc.contains(kAccumulationStride))
        out.push_back("missing required key '_ACCUMULATION_STRIDE'");
    if (!out.empty()) return out;

    const auto& dims = doc.at(kArrayDimensions);
    const auto& stride = doc.at(kAccumulationStride);
    if (!dims.is_array() || !std::all_of(dims.begin(), dims.end(),
                                         [](const json& v) { return v.is_string(); }))
        out.push_back("'_ARRAY_DIMENSIONS' must be an array of strings");
    if (!stride.is_array() ||
        !std::all_of(stride.begin(), stride.end(),
                     [](const json& v) { return v.is_number_integer(); }))
        out.push_back("'_ACCUMULATION_STRIDE' must be an array of integers");
    if (!out.empty()) return out;

    if (dims.size() != stride.size())
        out.push_back("'_ARRAY_DIMENSIONS' and '_ACCUMULATION_STRIDE' must be of equal length");
    for (const auto& v : stride)
        if (v.get<std::int64_t>() < 0)
            out.push_back("accumulation stride must be a non-negative integer");
    return out;
}

std::string schema_fixture_name(SchemaKind kind)
{
    return kind == SchemaKind::group ? "accumulation_group.schema.json"
                                     : "accumulation_dataset.schema.json";
}

} // namespace zacc
