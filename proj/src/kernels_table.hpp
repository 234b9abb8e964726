#pragma once

#include <cstddef>

// Private dispatch table shared by the kernel translation units.
namespace listrank::kernels::detail {

struct VTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max_value)(const double*, std::size_t);
  double (*sumsq_diff)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*matvec_t)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*rank1_update)(double*, std::size_t, std::size_t, double, const double*,
                       const double*);
  void (*adam_update)(double*, double*, double*, const double*, std::size_t, double,
                      double, double, double, double, double);
};

// nullptr when the binary was built without AVX2 support.
const VTable* avx2_vtable();

}  // namespace listrank::kernels::detail
