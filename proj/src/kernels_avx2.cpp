// AVX2 kernel variants. Each loop mirrors the scalar reference exactly:
// lane-independent ops are trivially identical, and reductions follow the
// dot4 lane contract, so results are bit-identical to the scalar table.

#include "beta/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace beta::kern {
namespace {

void a_vadd(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void a_vsub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void a_vmul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void a_vscale(const double* x, double s, double* out, std::size_t n) {
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), sv));
    for (; i < n; ++i) out[i] = x[i] * s;
}

void a_vaxpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void a_vrelu(const double* x, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(xv, mask));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void a_vrelu_bwd(const double* x, const double* g, double* gx, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d t = _mm256_and_pd(_mm256_loadu_pd(g + i), mask);
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), t));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void a_vleaky(const double* x, double slope, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sl = _mm256_set1_pd(slope);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(sl, xv), xv, mask));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void a_vleaky_bwd(const double* x, double slope, const double* g, double* gx,
                  std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sl = _mm256_set1_pd(slope);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d t = _mm256_blendv_pd(_mm256_mul_pd(sl, gv), gv, mask);
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), t));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void a_vclamp(const double* x, double lo, double hi, double* out, std::size_t n) {
    const __m256d lov = _mm256_set1_pd(lo);
    const __m256d hiv = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d t = _mm256_blendv_pd(xv, lov, _mm256_cmp_pd(xv, lov, _CMP_LT_OQ));
        t = _mm256_blendv_pd(t, hiv, _mm256_cmp_pd(t, hiv, _CMP_GT_OQ));
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i) {
        double t = x[i] < lo ? lo : x[i];
        out[i] = t > hi ? hi : t;
    }
}

double a_dot4(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                               _mm256_loadu_pd(b + i)));
    double s[4];
    _mm256_storeu_pd(s, acc);
    for (; i < n; ++i) s[i % 4] += a[i] * b[i];
    return (s[0] + s[1]) + (s[2] + s[3]);
}

void a_matmul(std::size_t m, std::size_t k, std::size_t n, const double* A,
              const double* B, double* C) {
    std::memset(C, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aik = A[i * k + p];
            const double* brow = B + p * n;
            const __m256d av = _mm256_set1_pd(aik);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(brow + j));
                _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), t));
            }
            for (; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void a_matmul_acc_nt(std::size_t m, std::size_t n, std::size_t k, const double* G,
                     const double* B, double* GA) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            GA[i * k + l] += a_dot4(grow, B + l * n, n);
        }
    }
}

void a_matmul_acc_tn(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* G, double* GB) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = A[i * k + l];
            const __m256d av = _mm256_set1_pd(ail);
            double* gbrow = GB + l * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(grow + j));
                _mm256_storeu_pd(gbrow + j,
                                 _mm256_add_pd(_mm256_loadu_pd(gbrow + j), t));
            }
            for (; j < n; ++j) gbrow[j] += ail * grow[j];
        }
    }
}

void a_adam(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
            double beta1, double beta2, double eps, double bc1, double bc2) {
    const __m256d b1v = _mm256_set1_pd(beta1);
    const __m256d b2v = _mm256_set1_pd(beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d bc1v = _mm256_set1_pd(bc1);
    const __m256d bc2v = _mm256_set1_pd(bc2);
    const __m256d epsv = _mm256_set1_pd(eps);
    const __m256d lrv = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1v, _mm256_loadu_pd(m + i)),
                                   _mm256_mul_pd(omb1, gv));
        __m256d gg = _mm256_mul_pd(gv, gv);
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2v, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(omb2, gg));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_div_pd(mv, bc1v);
        __m256d vhat = _mm256_div_pd(vv, bc2v);
        __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        __m256d q = _mm256_div_pd(mhat, den);
        _mm256_storeu_pd(p + i,
                         _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_mul_pd(lrv, q)));
    }
    const double somb1 = 1.0 - beta1;
    const double somb2 = 1.0 - beta2;
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + somb1 * g[i];
        v[i] = beta2 * v[i] + somb2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

void a_pgd_sign_step(const double* x, const double* g, const double* xo, double alpha,
                     double eps, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d mone = _mm256_set1_pd(-1.0);
    const __m256d alphav = _mm256_set1_pd(alpha);
    const __m256d epsv = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d sgn = _mm256_blendv_pd(zero, one, _mm256_cmp_pd(gv, zero, _CMP_GT_OQ));
        sgn = _mm256_blendv_pd(sgn, mone, _mm256_cmp_pd(gv, zero, _CMP_LT_OQ));
        __m256d v = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(alphav, sgn));
        __m256d xov = _mm256_loadu_pd(xo + i);
        __m256d rlo = _mm256_blendv_pd(zero, xov, _mm256_cmp_pd(xov, zero, _CMP_LT_OQ));
        __m256d rhi = _mm256_blendv_pd(one, xov, _mm256_cmp_pd(xov, one, _CMP_GT_OQ));
        __m256d bl = _mm256_sub_pd(xov, epsv);
        __m256d bh = _mm256_add_pd(xov, epsv);
        __m256d lo = _mm256_blendv_pd(rlo, bl, _mm256_cmp_pd(bl, rlo, _CMP_GT_OQ));
        __m256d hi = _mm256_blendv_pd(rhi, bh, _mm256_cmp_pd(bh, rhi, _CMP_LT_OQ));
        __m256d t = _mm256_blendv_pd(v, lo, _mm256_cmp_pd(v, lo, _CMP_LT_OQ));
        t = _mm256_blendv_pd(t, hi, _mm256_cmp_pd(t, hi, _CMP_GT_OQ));
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i) {
        const double sgn = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        const double v = x[i] + alpha * sgn;
        const double rlo = xo[i] < 0.0 ? xo[i] : 0.0;
        const double rhi = xo[i] > 1.0 ? xo[i] : 1.0;
        const double lo = xo[i] - eps > rlo ? xo[i] - eps : rlo;
        const double hi = xo[i] + eps < rhi ? xo[i] + eps : rhi;
        const double t = v < lo ? lo : v;
        out[i] = t > hi ? hi : t;
    }
}

}  // namespace

const Ops* avx2_ops() {
    if (!__builtin_cpu_supports("avx2")) return nullptr;
    static const Ops table = {
        "avx2",    a_vadd,          a_vsub,          a_vmul,   a_vscale,
        a_vaxpy,   a_vrelu,         a_vrelu_bwd,     a_vleaky, a_vleaky_bwd,
        a_vclamp,  a_dot4,          a_matmul,        a_matmul_acc_nt,
        a_matmul_acc_tn, a_adam,    a_pgd_sign_step,
    };
    return &table;
}

}  // namespace beta::kern

#else

namespace beta::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace beta::kern

#endif
