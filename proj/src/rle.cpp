#include "ratseg/rle.hpp"

namespace ratseg {

Rle encode_rle(const BinaryMask& mask) {
    Rle rle{mask.height(), mask.width(), {}};
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (auto v : mask.data()) {
        const std::uint8_t bit = v ? 1 : 0;
        if (bit != current) {
            rle.counts.push_back(run);
            run = 0;
            current = bit;
        }
        ++run;
    }
    rle.counts.push_back(run);
    return rle;
}

BinaryMask decode_rle(const Rle& rle) {
    if (rle.width < 0 || rle.height < 0) throw Error(ErrorCode::SchemaError, "negative RLE size");
    BinaryMask mask(rle.width, rle.height, 0);
    std::size_t pos = 0;
    std::uint8_t bit = 0;
    for (auto run : rle.counts) {
        if (pos + run > mask.size()) throw Error(ErrorCode::SchemaError, "RLE runs exceed mask size");
        for (std::uint32_t i = 0; i < run; ++i) mask[pos++] = bit;
        bit ^= 1;
    }
    if (pos != mask.size()) throw Error(ErrorCode::SchemaError, "RLE runs do not cover the mask");
    return mask;
}

std::size_t rle_area(const Rle& rle) {
    std::size_t a = 0;
    for (std::size_t i = 1; i < rle.counts.size(); i += 2) a += rle.counts[i];
    return a;
}

nlohmann::json to_json(const Rle& rle) {
    return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const nlohmann::json& j) {
    try {
        Rle r;
        const auto& size = j.at("size");
        if (!size.is_array() || size.size() != 2) throw Error(ErrorCode::SchemaError, "RLE size must be [h, w]");
        r.height = size[0].get<int>();
        r.width = size[1].get<int>();
        r.counts = j.at("counts").get<std::vector<std::uint32_t>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("bad RLE: ") + e.what());
    }
}

}  // namespace ratseg
