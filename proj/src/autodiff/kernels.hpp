#ifndef AVNAV_AUTODIFF_KERNELS_HPP_
#define AVNAV_AUTODIFF_KERNELS_HPP_

#include <cstddef>

// Dense float32 kernels. Fixed 8-lane accumulators keep the summation order
// independent of the compiler's vectorisation choices.
namespace avnav::ad::kernels {

inline float dot(const float* a, const float* b, std::size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  float s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
            ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// C[m,n] += A[m,k] * B[k,n]
inline void gemm_nn(const float* a, const float* b, float* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * n;
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      axpy(av, b + p * n, crow, n);
    }
  }
}

// C[m,k] += A[m,n] * B[k,n]^T
inline void gemm_nt(const float* a, const float* b, float* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * n;
    float* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) crow[p] += dot(arow, b + p * n, n);
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
inline void gemm_tn(const float* a, const float* b, float* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    const float* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      axpy(av, brow, c + p * n, n);
    }
  }
}

}  // namespace avnav::ad::kernels

#endif  // AVNAV_AUTODIFF_KERNELS_HPP_
