#pragma once

#include <cstddef>

namespace beta::kern {

// Dense double-precision kernels behind the tensor engine. Every entry has a
// scalar reference implementation and may have SIMD variants; all variants of
// one kernel must produce bit-identical results (equivalence-tested). To make
// that possible the accumulation order is part of each kernel's contract:
//
//   matmul        C = A*B, C[i][j] accumulates over k ascending
//   matmul_acc_nt GA += G*B^T, each cell is a dot4 (4-lane interleaved sum)
//   matmul_acc_tn GB += A^T*G, accumulates over i ascending
//   dot4          s[l] += a[i]*b[i] for l = i%4, result ((s0+s1)+(s2+s3))
//
// and no kernel may be compiled with FP contraction or fast-math.
struct Ops {
    const char* name;

    void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
    void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
    void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
    void (*vscale)(const double* x, double s, double* out, std::size_t n);
    // y += a*x
    void (*vaxpy)(double a, const double* x, double* y, std::size_t n);
    void (*vrelu)(const double* x, double* out, std::size_t n);
    // gx += g * 1[x > 0]
    void (*vrelu_bwd)(const double* x, const double* g, double* gx, std::size_t n);
    void (*vleaky)(const double* x, double slope, double* out, std::size_t n);
    // gx += g * (x > 0 ? 1 : slope)
    void (*vleaky_bwd)(const double* x, double slope, const double* g, double* gx,
                       std::size_t n);
    void (*vclamp)(const double* x, double lo, double hi, double* out, std::size_t n);

    double (*dot4)(const double* a, const double* b, std::size_t n);

    // C (m x n) = A (m x k) * B (k x n)
    void (*matmul)(std::size_t m, std::size_t k, std::size_t n, const double* A,
                   const double* B, double* C);
    // GA (m x k) += G (m x n) * B^T, with B (k x n)
    void (*matmul_acc_nt)(std::size_t m, std::size_t n, std::size_t k, const double* G,
                          const double* B, double* GA);
    // GB (k x n) += A^T * G, with A (m x k), G (m x n)
    void (*matmul_acc_tn)(std::size_t m, std::size_t k, std::size_t n, const double* A,
                          const double* G, double* GB);

    // Fused Adam update with bias correction factors bc1 = 1-beta1^t, bc2 = 1-beta2^t.
    void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2);

    // Fused PGD sign step: out = clip(x + alpha*sign(g)) to the per-cell box
    //   [max(xo-eps, min(0,xo)), min(xo+eps, max(1,xo))]
    // i.e. the l-inf ball around x_orig intersected with the feature range,
    // with the range bound relaxed when x_orig itself lies outside [0,1].
    void (*pgd_sign_step)(const double* x, const double* g, const double* x_orig,
                          double alpha, double eps, double* out, std::size_t n);
};

// Scalar reference table; always available.
const Ops& scalar_ops();

// AVX2 table, or nullptr when the CPU (or build) does not support it.
const Ops* avx2_ops();

// Active table. Chosen once per process: AVX2 when available, else scalar.
// Environment variable BETA_KERNELS=scalar|avx2 forces a variant.
const Ops& ops();

}  // namespace beta::kern
