#include "pipeline/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "autodiff/blas.hpp"

namespace gliomaseg::pipeline {

int env_threads() {
  const char* v = std::getenv("GLIOMASEG_THREADS");
  if (v == nullptr) return 0;
  try {
    const int n = std::stoi(v);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

void set_threads(int n) {
  if (n <= 0) return;
  omp_set_num_threads(n);
  ad::set_blas_threads(n);
}

void init_threads_from_env() { set_threads(env_threads()); }

}  // namespace gliomaseg::pipeline
