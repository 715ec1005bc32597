#pragma once

// Distance kernels. Each kernel has a serial reference and an OpenMP
// version; both evaluate every row with the same accumulation order, so
// their outputs are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>

namespace rca::kernels {

enum class Exec { Serial, Parallel };

// out[r] = ||rows[r] - query||^2 for a row-major matrix with `dim` columns.
void l2sq_rows_serial(std::span<const float> rows, std::size_t dim,
                      std::span<const float> query, std::span<double> out);
void l2sq_rows_parallel(std::span<const float> rows, std::size_t dim,
                        std::span<const float> query, std::span<double> out);

// Same for 8-bit codes decoded as lo[r] + code * step[r].
void l2sq_codes_serial(std::span<const std::uint8_t> codes, std::span<const float> lo,
                       std::span<const float> step, std::size_t dim,
                       std::span<const float> query, std::span<double> out);
void l2sq_codes_parallel(std::span<const std::uint8_t> codes, std::span<const float> lo,
                         std::span<const float> step, std::size_t dim,
                         std::span<const float> query, std::span<double> out);

inline void l2sq_rows(Exec exec, std::span<const float> rows, std::size_t dim,
                      std::span<const float> query, std::span<double> out) {
    if (exec == Exec::Parallel)
        l2sq_rows_parallel(rows, dim, query, out);
    else
        l2sq_rows_serial(rows, dim, query, out);
}

inline void l2sq_codes(Exec exec, std::span<const std::uint8_t> codes,
                       std::span<const float> lo, std::span<const float> step, std::size_t dim,
                       std::span<const float> query, std::span<double> out) {
    if (exec == Exec::Parallel)
        l2sq_codes_parallel(codes, lo, step, dim, query, out);
    else
        l2sq_codes_serial(codes, lo, step, dim, query, out);
}

}  // namespace rca::kernels
