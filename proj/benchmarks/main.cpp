#include <benchmark/benchmark.h>

// Own main: the distro's benchmark_main archive is built with a different LTO version.
BENCHMARK_MAIN();
