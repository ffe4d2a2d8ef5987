#pragma once

namespace gliomaseg::pipeline {

/// Worker count from GLIOMASEG_THREADS, 0 when unset or invalid.
int env_threads();

/// Bounds OpenMP and BLAS parallelism; n <= 0 keeps the defaults.
void set_threads(int n);

/// Applies env_threads() once.
void init_threads_from_env();

}  // namespace gliomaseg::pipeline
