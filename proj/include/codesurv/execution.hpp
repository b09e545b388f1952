#pragma once

namespace codesurv {

// Selects between the OpenMP kernels and their serial reference versions.
enum class Execution { Serial, Parallel };

// Number of worker threads the parallel kernels will use (1 without OpenMP).
int parallel_threads();

}  // namespace codesurv
