#pragma once

// Dense double-precision inner loops used by the tensor ops.
//
// Every kernel exists as a portable scalar reference and, on x86-64, an
// AVX2+FMA variant. The active table is picked once per process from the
// CPU's feature bits; CLMRC_KERNELS=scalar forces the reference path.
// All matrices are row-major and contiguous. The gemm kernels accumulate
// into C (C += ...), callers zero C when they want a plain product.

#include <cstddef>
#include <string_view>

namespace clmrc::kernels {

struct KernelTable {
    std::string_view name;

    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // C(m x n) += A(m x k) * B(k x n)
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
    // C(m x n) += A(m x k) * B(n x k)^T
    void (*gemm_nt)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
    // C(m x n) += A(k x m)^T * B(k x n)
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// The table selected for this process.
const KernelTable& active();

}  // namespace clmrc::kernels
