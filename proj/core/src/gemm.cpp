#include "gemm.hpp"

#include <Eigen/Core>

namespace pairsynth::detail {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  ConstMatMap A(a, m, k), B(b, k, n);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  ConstMatMap A(a, k, m), B(b, k, n);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
             bool accumulate) {
  ConstMatMap A(a, m, k), B(b, n, k);
  MatMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace pairsynth::detail
