#include "listrank/kernels.hpp"

#include <cmath>
#include <cstring>

#include "kernels_table.hpp"
#include "listrank/errors.hpp"

namespace listrank::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double max_value(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double sumsq_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y) {
  std::memset(y, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) axpy(x[r], a + r * cols, y, cols);
}

void rank1_update(double* a, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * x[r], y, a + r * cols, cols);
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace scalar

namespace {

constexpr detail::VTable kScalarTable = {
    &scalar::dot,      &scalar::sum,          &scalar::max_value,
    &scalar::sumsq_diff, &scalar::axpy,       &scalar::matvec,
    &scalar::matvec_t, &scalar::rank1_update, &scalar::adam_update,
};

struct Dispatch {
  const detail::VTable* table;
  Backend backend;
};

Dispatch detect() {
  if (const detail::VTable* t = detail::avx2_vtable()) {
    return {t, Backend::Avx2};
  }
  return {&kScalarTable, Backend::Scalar};
}

Dispatch g_dispatch = detect();

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

bool backend_available(Backend b) {
  if (b == Backend::Scalar) return true;
  return detail::avx2_vtable() != nullptr;
}

Backend active_backend() { return g_dispatch.backend; }

void set_backend(Backend b) {
  if (b == Backend::Scalar) {
    g_dispatch = {&kScalarTable, Backend::Scalar};
    return;
  }
  const detail::VTable* t = detail::avx2_vtable();
  if (!t) {
    throw ConfigError("kernel backend 'avx2' is not available on this machine");
  }
  g_dispatch = {t, Backend::Avx2};
}

void reset_backend() { g_dispatch = detect(); }

double dot(const double* a, const double* b, std::size_t n) {
  return g_dispatch.table->dot(a, b, n);
}

double sum(const double* x, std::size_t n) { return g_dispatch.table->sum(x, n); }

double max_value(const double* x, std::size_t n) {
  return g_dispatch.table->max_value(x, n);
}

double sumsq_diff(const double* a, const double* b, std::size_t n) {
  return g_dispatch.table->sumsq_diff(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_dispatch.table->axpy(alpha, x, y, n);
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x,
            double* y) {
  g_dispatch.table->matvec(a, rows, cols, x, y);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
              double* y) {
  g_dispatch.table->matvec_t(a, rows, cols, x, y);
}

void rank1_update(double* a, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y) {
  g_dispatch.table->rank1_update(a, rows, cols, alpha, x, y);
}

void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  g_dispatch.table->adam_update(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace listrank::kernels
