#include "beta/kernels.hpp"

#include <cmath>
#include <cstring>

namespace beta::kern {
namespace {

void s_vadd(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_vsub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_vmul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_vscale(const double* x, double s, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * s;
}

void s_vaxpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void s_vrelu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_vrelu_bwd(const double* x, const double* g, double* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void s_vleaky(const double* x, double slope, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void s_vleaky_bwd(const double* x, double slope, const double* g, double* gx,
                  std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void s_vclamp(const double* x, double lo, double hi, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double t = x[i] < lo ? lo : x[i];
        out[i] = t > hi ? hi : t;
    }
}

double s_dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) {
        switch (i % 4) {
            case 0: s0 += a[i] * b[i]; break;
            case 1: s1 += a[i] * b[i]; break;
            case 2: s2 += a[i] * b[i]; break;
            default: s3 += a[i] * b[i]; break;
        }
    }
    return (s0 + s1) + (s2 + s3);
}

void s_matmul(std::size_t m, std::size_t k, std::size_t n, const double* A,
              const double* B, double* C) {
    std::memset(C, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aik = A[i * k + p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void s_matmul_acc_nt(std::size_t m, std::size_t n, std::size_t k, const double* G,
                     const double* B, double* GA) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            GA[i * k + l] += s_dot4(grow, B + l * n, n);
        }
    }
}

void s_matmul_acc_tn(std::size_t m, std::size_t k, std::size_t n, const double* A,
                     const double* G, double* GB) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = A[i * k + l];
            double* gbrow = GB + l * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += ail * grow[j];
        }
    }
}

void s_adam(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
            double beta1, double beta2, double eps, double bc1, double bc2) {
    const double omb1 = 1.0 - beta1;
    const double omb2 = 1.0 - beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + omb1 * g[i];
        v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

void s_pgd_sign_step(const double* x, const double* g, const double* xo, double alpha,
                     double eps, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
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

const Ops& scalar_ops() {
    static const Ops table = {
        "scalar",  s_vadd,          s_vsub,          s_vmul,  s_vscale,
        s_vaxpy,   s_vrelu,         s_vrelu_bwd,     s_vleaky, s_vleaky_bwd,
        s_vclamp,  s_dot4,          s_matmul,        s_matmul_acc_nt,
        s_matmul_acc_tn, s_adam,    s_pgd_sign_step,
    };
    return table;
}

}  // namespace beta::kern
