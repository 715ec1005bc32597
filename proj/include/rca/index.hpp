#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "rca/embed.hpp"
#include "rca/kernels.hpp"

namespace rca {

struct SearchHit {
    std::string id;
    double distance = 0.0;   // L2
    double relevance = 0.0;  // clamp(1 - d^2/2, 0, 1)

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

double relevance_from_distance(double distance);
double relevance_from_squared(double squared_distance);

/// Orders row indices by (distance, id) and keeps the first k.
std::vector<SearchHit> select_top_k(std::span<const double> squared,
                                    std::span<const std::string> ids, std::size_t k);

class FlatIndex {
public:
    FlatIndex() = default;

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const float> data() const { return data_; }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }
    std::optional<std::size_t> find(std::string_view id) const;

    std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                  kernels::Exec exec = kernels::Exec::Parallel) const;
    // Throws Error(NotFound) for an unknown id.
    double distance_to(std::string_view id, std::span<const float> query) const;

private:
    friend FlatIndex build_flat_index(std::vector<std::pair<std::string, EmbeddingVector>>);
    friend FlatIndex make_flat_index(std::size_t, std::vector<std::string>, std::vector<float>);

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Per-vector min/max scalar quantization to 8 bits; searches over the
/// decoded values.
class QuantizedIndex {
public:
    QuantizedIndex() = default;

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const std::uint8_t> codes(std::size_t i) const {
        return std::span<const std::uint8_t>(codes_).subspan(i * dim_, dim_);
    }
    float min_value(std::size_t i) const { return lo_[i]; }
    float max_value(std::size_t i) const { return hi_[i]; }
    std::vector<float> decode(std::size_t i) const;
    std::optional<std::size_t> find(std::string_view id) const;

    std::vector<SearchHit> search(std::span<const float> query, std::size_t k,
                                  kernels::Exec exec = kernels::Exec::Parallel) const;
    double distance_to(std::string_view id, std::span<const float> query) const;

private:
    friend QuantizedIndex quantize(const FlatIndex&);
    friend QuantizedIndex make_quantized_index(std::size_t, std::vector<std::string>,
                                               std::vector<float>, std::vector<float>,
                                               std::vector<std::uint8_t>);

    void finish();

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::uint8_t> codes_;
    std::vector<float> lo_;
    std::vector<float> hi_;
    std::vector<float> step_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// Throws Error(InvalidArgument) on empty input, duplicate ids, mixed or
// zero dimensions, and non-finite components.
FlatIndex build_flat_index(std::vector<std::pair<std::string, EmbeddingVector>> pairs);
FlatIndex make_flat_index(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

QuantizedIndex quantize(const FlatIndex& flat);
QuantizedIndex make_quantized_index(std::size_t dim, std::vector<std::string> ids,
                                    std::vector<float> lo, std::vector<float> hi,
                                    std::vector<std::uint8_t> codes);

using AnyIndex = std::variant<FlatIndex, QuantizedIndex>;

std::size_t index_size(const AnyIndex& index);
std::size_t index_dimension(const AnyIndex& index);
std::vector<SearchHit> search(const AnyIndex& index, std::span<const float> query, std::size_t k,
                              kernels::Exec exec = kernels::Exec::Parallel);
double distance_to(const AnyIndex& index, std::string_view id, std::span<const float> query);

// File layout: "RCAIDX1", u8 version, u8 kind (0 flat, 1 quantized),
// u32 dimension, u64 count, then count length-prefixed (u32) UTF-8 ids,
// then either count*dim f32 values or, per entry, f32 min, f32 max and dim
// u8 codes. All integers and floats little-endian.
inline constexpr std::string_view kIndexMagic = "RCAIDX1";
inline constexpr std::uint8_t kIndexVersion = 1;

std::string serialize_index(const AnyIndex& index);
AnyIndex deserialize_index(std::string_view bytes);
void save_index(const AnyIndex& index, const std::string& path);
AnyIndex load_index(const std::string& path);

}  // namespace rca
