#include "rca/kernels.hpp"

namespace rca::kernels {

namespace {

inline double row_l2sq(const float* row, const float* q, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = static_cast<double>(row[j]) - q[j];
        acc += d * d;
    }
    return acc;
}

inline double code_l2sq(const std::uint8_t* code, double lo, double step, const float* q,
                        std::size_t dim) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = (lo + code[j] * step) - q[j];
        acc += d * d;
    }
    return acc;
}

}  // namespace

void l2sq_rows_serial(std::span<const float> rows, std::size_t dim,
                      std::span<const float> query, std::span<double> out) {
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = row_l2sq(rows.data() + r * dim, query.data(), dim);
}

void l2sq_rows_parallel(std::span<const float> rows, std::size_t dim,
                        std::span<const float> query, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        out[static_cast<std::size_t>(r)] =
            row_l2sq(rows.data() + static_cast<std::size_t>(r) * dim, query.data(), dim);
}

void l2sq_codes_serial(std::span<const std::uint8_t> codes, std::span<const float> lo,
                       std::span<const float> step, std::size_t dim,
                       std::span<const float> query, std::span<double> out) {
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = code_l2sq(codes.data() + r * dim, lo[r], step[r], query.data(), dim);
}

void l2sq_codes_parallel(std::span<const std::uint8_t> codes, std::span<const float> lo,
                         std::span<const float> step, std::size_t dim,
                         std::span<const float> query, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto i = static_cast<std::size_t>(r);
        out[i] = code_l2sq(codes.data() + i * dim, lo[i], step[i], query.data(), dim);
    }
}

}  // namespace rca::kernels
