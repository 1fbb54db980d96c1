#pragma once

#include <cstdint>

namespace pairsynth::detail {

// Row-major double GEMMs, C (m x n). When accumulate is false C is overwritten.
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate);
// C = A^T * B with A (k x m), B (k x n).
void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate);
// C = A * B^T with A (m x k), B (n x k).
void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate);

}  // namespace pairsynth::detail
