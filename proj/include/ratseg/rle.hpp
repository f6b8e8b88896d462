#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ratseg/raster.hpp"

namespace ratseg {

/// Uncompressed run-length encoding of a binary mask. Runs alternate
/// unset/set in row-major order and always start with an unset run (possibly
/// of length zero). Serialized as {"size": [h, w], "counts": [...]}.
struct Rle {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;
    bool operator==(const Rle&) const = default;
};

Rle encode_rle(const BinaryMask& mask);
/// Throws SchemaError when the runs do not cover exactly height * width pixels.
BinaryMask decode_rle(const Rle& rle);
std::size_t rle_area(const Rle& rle);

nlohmann::json to_json(const Rle& rle);
Rle rle_from_json(const nlohmann::json& j);

}  // namespace ratseg
