#pragma once

#include <cstddef>

// Data-parallel inner loops behind the neural-net, metric and analysis code.
// Scalar reference kernels always exist; an AVX2 variant is picked at runtime
// when the CPU supports it. SIMD variants change the accumulation order (and
// may contract to FMA), so they agree with the references to rounding, not
// bit-exactly; the equivalence tests pin the tolerance.
namespace listrank::kernels {

enum class Backend { Scalar, Avx2 };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
// Throws ConfigError if the backend is not available on this machine.
void set_backend(Backend b);
// Back to auto-detection (best available).
void reset_backend();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);  // n >= 1
double sumsq_diff(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y = A x, A row-major [rows x cols], x len cols, y len rows
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y);
// y = A^T x, x len rows, y len cols
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y);
// A += alpha * x y^T, x len rows, y len cols
void rank1_update(double* a, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y);
// Adam with bias correction folded in by the caller:
//   m = beta1 m + (1-beta1) g;  v = beta2 v + (1-beta2) g^2
//   p -= lr * (m / bc1) / (sqrt(v / bc2) + eps)
void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2);

// Reference implementations, used directly by the equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
double sumsq_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y);
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y);
void rank1_update(double* a, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y);
void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2);
}  // namespace scalar

}  // namespace listrank::kernels
