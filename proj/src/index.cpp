#include "rca/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "rca/util.hpp"

namespace rca {

namespace {

void check_query(std::size_t dim, std::span<const float> query) {
    if (query.size() != dim)
        fail(ErrorKind::InvalidArgument, "query dimension " + std::to_string(query.size()) +
                                             " does not match index dimension " +
                                             std::to_string(dim));
}

std::unordered_map<std::string, std::size_t> index_ids(const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> by_id;
    by_id.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i].empty()) fail(ErrorKind::InvalidArgument, "empty id in index");
        if (!by_id.emplace(ids[i], i).second)
            fail(ErrorKind::InvalidArgument, "duplicate id in index: " + ids[i]);
    }
    return by_id;
}

// Little-endian byte writer/reader.
class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { out_.append(s); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) fail(ErrorKind::Format, "truncated index file");
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

double relevance_from_squared(double squared_distance) {
    return std::clamp(1.0 - squared_distance / 2.0, 0.0, 1.0);
}

double relevance_from_distance(double distance) {
    if (distance < 0.0 || std::isnan(distance))
        fail(ErrorKind::InvalidArgument, "distance must be non-negative");
    return relevance_from_squared(distance * distance);
}

std::vector<SearchHit> select_top_k(std::span<const double> squared,
                                    std::span<const std::string> ids, std::size_t k) {
    std::vector<std::size_t> order(squared.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, order.size());
    auto less = [&](std::size_t a, std::size_t b) {
        if (squared[a] != squared[b]) return squared[a] < squared[b];
        return ids[a] < ids[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), less);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto r = order[i];
        const double d2 = std::max(0.0, squared[r]);
        hits.push_back(SearchHit{ids[r], std::sqrt(d2), relevance_from_squared(d2)});
    }
    return hits;
}

// ---- FlatIndex ------------------------------------------------------------

FlatIndex make_flat_index(std::size_t dim, std::vector<std::string> ids, std::vector<float> data) {
    if (ids.empty()) fail(ErrorKind::InvalidArgument, "cannot build an empty index");
    if (dim == 0) fail(ErrorKind::InvalidArgument, "index dimension must be positive");
    if (data.size() != ids.size() * dim)
        fail(ErrorKind::InvalidArgument, "index data size does not match ids x dimension");
    for (float v : data)
        if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite vector component");
    FlatIndex index;
    index.by_id_ = index_ids(ids);
    index.dim_ = dim;
    index.ids_ = std::move(ids);
    index.data_ = std::move(data);
    return index;
}

FlatIndex build_flat_index(std::vector<std::pair<std::string, EmbeddingVector>> pairs) {
    if (pairs.empty()) fail(ErrorKind::InvalidArgument, "cannot build an empty index");
    const std::size_t dim = pairs.front().second.dimension();
    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(pairs.size());
    data.reserve(pairs.size() * dim);
    for (auto& [id, vec] : pairs) {
        if (vec.dimension() != dim)
            fail(ErrorKind::InvalidArgument, "dimension mismatch for id " + id + ": " +
                                                 std::to_string(vec.dimension()) + " vs " +
                                                 std::to_string(dim));
        ids.push_back(std::move(id));
        data.insert(data.end(), vec.values.begin(), vec.values.end());
    }
    return make_flat_index(dim, std::move(ids), std::move(data));
}

std::optional<std::size_t> FlatIndex::find(std::string_view id) const {
    if (auto it = by_id_.find(std::string(id)); it != by_id_.end()) return it->second;
    return std::nullopt;
}

std::vector<SearchHit> FlatIndex::search(std::span<const float> query, std::size_t k,
                                         kernels::Exec exec) const {
    check_query(dim_, query);
    if (k == 0) return {};
    std::vector<double> d2(size());
    kernels::l2sq_rows(exec, data_, dim_, query, d2);
    return select_top_k(d2, ids_, k);
}

double FlatIndex::distance_to(std::string_view id, std::span<const float> query) const {
    check_query(dim_, query);
    const auto i = find(id);
    if (!i) fail(ErrorKind::NotFound, "unknown id: " + std::string(id));
    double d2 = 0.0;
    kernels::l2sq_rows_serial(row(*i), dim_, query, std::span<double>(&d2, 1));
    return std::sqrt(d2);
}

// ---- QuantizedIndex -------------------------------------------------------

void QuantizedIndex::finish() {
    by_id_ = index_ids(ids_);
    step_.resize(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) step_[i] = (hi_[i] - lo_[i]) / 255.0f;
}

QuantizedIndex quantize(const FlatIndex& flat) {
    if (flat.size() == 0) fail(ErrorKind::InvalidArgument, "cannot quantize an empty index");
    QuantizedIndex q;
    q.dim_ = flat.dimension();
    q.ids_ = flat.ids();
    q.codes_.resize(flat.size() * q.dim_);
    q.lo_.resize(flat.size());
    q.hi_.resize(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const auto row = flat.row(i);
        const auto [mn, mx] = std::ranges::minmax(row);
        q.lo_[i] = mn;
        q.hi_[i] = mx;
        const double range = static_cast<double>(mx) - mn;
        for (std::size_t j = 0; j < q.dim_; ++j) {
            const double t = range > 0 ? (row[j] - static_cast<double>(mn)) / range * 255.0 : 0.0;
            q.codes_[i * q.dim_ + j] =
                static_cast<std::uint8_t>(std::clamp(std::lround(t), 0L, 255L));
        }
    }
    q.finish();
    return q;
}

QuantizedIndex make_quantized_index(std::size_t dim, std::vector<std::string> ids,
                                    std::vector<float> lo, std::vector<float> hi,
                                    std::vector<std::uint8_t> codes) {
    if (ids.empty()) fail(ErrorKind::InvalidArgument, "cannot build an empty index");
    if (dim == 0) fail(ErrorKind::InvalidArgument, "index dimension must be positive");
    if (lo.size() != ids.size() || hi.size() != ids.size() || codes.size() != ids.size() * dim)
        fail(ErrorKind::InvalidArgument, "quantized index arrays have inconsistent sizes");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || hi[i] < lo[i])
            fail(ErrorKind::InvalidArgument, "bad quantization range");
    QuantizedIndex q;
    q.dim_ = dim;
    q.ids_ = std::move(ids);
    q.lo_ = std::move(lo);
    q.hi_ = std::move(hi);
    q.codes_ = std::move(codes);
    q.finish();
    return q;
}

std::vector<float> QuantizedIndex::decode(std::size_t i) const {
    std::vector<float> out(dim_);
    const auto c = codes(i);
    for (std::size_t j = 0; j < dim_; ++j)
        out[j] = static_cast<float>(lo_[i] + c[j] * static_cast<double>(step_[i]));
    return out;
}

std::optional<std::size_t> QuantizedIndex::find(std::string_view id) const {
    if (auto it = by_id_.find(std::string(id)); it != by_id_.end()) return it->second;
    return std::nullopt;
}

std::vector<SearchHit> QuantizedIndex::search(std::span<const float> query, std::size_t k,
                                              kernels::Exec exec) const {
    check_query(dim_, query);
    if (k == 0) return {};
    std::vector<double> d2(size());
    kernels::l2sq_codes(exec, codes_, lo_, step_, dim_, query, d2);
    return select_top_k(d2, ids_, k);
}

double QuantizedIndex::distance_to(std::string_view id, std::span<const float> query) const {
    check_query(dim_, query);
    const auto i = find(id);
    if (!i) fail(ErrorKind::NotFound, "unknown id: " + std::string(id));
    double d2 = 0.0;
    kernels::l2sq_codes_serial(codes(*i), std::span<const float>(&lo_[*i], 1),
                               std::span<const float>(&step_[*i], 1), dim_, query,
                               std::span<double>(&d2, 1));
    return std::sqrt(d2);
}

// ---- AnyIndex -------------------------------------------------------------

std::size_t index_size(const AnyIndex& index) {
    return std::visit([](const auto& ix) { return ix.size(); }, index);
}

std::size_t index_dimension(const AnyIndex& index) {
    return std::visit([](const auto& ix) { return ix.dimension(); }, index);
}

std::vector<SearchHit> search(const AnyIndex& index, std::span<const float> query, std::size_t k,
                              kernels::Exec exec) {
    return std::visit([&](const auto& ix) { return ix.search(query, k, exec); }, index);
}

double distance_to(const AnyIndex& index, std::string_view id, std::span<const float> query) {
    return std::visit([&](const auto& ix) { return ix.distance_to(id, query); }, index);
}

// ---- persistence ----------------------------------------------------------

std::string serialize_index(const AnyIndex& index) {
    Writer w;
    w.bytes(kIndexMagic);
    w.u8(kIndexVersion);
    w.u8(static_cast<std::uint8_t>(index.index()));
    const auto dim = index_dimension(index);
    const auto count = index_size(index);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(count);
    const auto& ids = std::visit([](const auto& ix) -> const std::vector<std::string>& {
        return ix.ids();
    }, index);
    for (const auto& id : ids) {
        w.u32(static_cast<std::uint32_t>(id.size()));
        w.bytes(id);
    }
    if (const auto* flat = std::get_if<FlatIndex>(&index)) {
        for (float v : flat->data()) w.f32(v);
    } else {
        const auto& q = std::get<QuantizedIndex>(index);
        for (std::size_t i = 0; i < count; ++i) {
            w.f32(q.min_value(i));
            w.f32(q.max_value(i));
            const auto c = q.codes(i);
            w.bytes(std::string_view(reinterpret_cast<const char*>(c.data()), c.size()));
        }
    }
    return w.take();
}

AnyIndex deserialize_index(std::string_view bytes) {
    Reader r(bytes);
    if (r.remaining() < kIndexMagic.size() || r.bytes(kIndexMagic.size()) != kIndexMagic)
        fail(ErrorKind::Format, "not an index file (bad magic)");
    const auto version = r.u8();
    if (version != kIndexVersion)
        fail(ErrorKind::Format, "unsupported index version " + std::to_string(version));
    const auto kind = r.u8();
    if (kind > 1) fail(ErrorKind::Format, "unknown index kind " + std::to_string(kind));
    const std::size_t dim = r.u32();
    const std::uint64_t count = r.u64();
    if (dim == 0 || count == 0) fail(ErrorKind::Format, "index header has zero size");
    // Each entry needs at least a 4-byte id length; reject absurd counts early.
    if (count > r.remaining() / 4) fail(ErrorKind::Format, "truncated index file");

    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) ids.emplace_back(r.bytes(r.u32()));

    try {
        if (kind == 0) {
            if (r.remaining() / 4 < count * dim) fail(ErrorKind::Format, "truncated index file");
            std::vector<float> data(count * dim);
            for (auto& v : data) v = r.f32();
            if (r.remaining() != 0) fail(ErrorKind::Format, "trailing bytes in index file");
            return make_flat_index(dim, std::move(ids), std::move(data));
        }
        std::vector<float> lo(count), hi(count);
        std::vector<std::uint8_t> codes(count * dim);
        for (std::uint64_t i = 0; i < count; ++i) {
            lo[i] = r.f32();
            hi[i] = r.f32();
            const auto c = r.bytes(dim);
            std::copy(c.begin(), c.end(), codes.begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
        if (r.remaining() != 0) fail(ErrorKind::Format, "trailing bytes in index file");
        return make_quantized_index(dim, std::move(ids), std::move(lo), std::move(hi),
                                    std::move(codes));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::Format, e.what());
        throw;
    }
}

void save_index(const AnyIndex& index, const std::string& path) {
    write_file(path, serialize_index(index));
}

AnyIndex load_index(const std::string& path) { return deserialize_index(read_file(path)); }

}  // namespace rca
