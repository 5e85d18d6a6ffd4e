#pragma once

// Include this instead of <omp.h> so everything builds with or without OpenMP.
#if defined(_OPENMP)
#include <omp.h>
namespace ncx {
constexpr bool use_omp = true;
}
#else
#pragma GCC diagnostic ignored "-Wunknown-pragmas"
namespace ncx {
constexpr bool use_omp = false;
}
#define omp_get_thread_num() 0
#define omp_get_max_threads() 1
#define omp_set_num_threads(n) ((void)0)
#endif
