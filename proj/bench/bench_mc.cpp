// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

// Serial vs OpenMP timings of the Monte Carlo kernels.
//   bench_mc [replicates]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "softcrowd/control.hpp"
#include "softcrowd/mc.hpp"

using namespace softcrowd;

namespace {

double seconds(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, const std::function<void(mc::Exec)>& f) {
  const double s = seconds([&] { f(mc::Exec::serial); });
  const double p = seconds([&] { f(mc::Exec::parallel); });
  std::printf("%-28s %10.3f %10.3f %8.2fx\n", name, s, p, s / p);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 5000;
  CrowdConfig c;
  c.n = 39;
  c.gains = {0.75};
  c.noise_sigma = 60.0;
  c.init = TargetMseInit{72000.0};
  const std::size_t T = 30;

  std::printf("threads %d, replicates %zu\n", omp_get_max_threads(), reps);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial_s", "omp_s", "speedup");

  row("draw bank", [&](mc::Exec e) { mc::DrawBank bank(c, T, reps, 1, e); });

  const mc::DrawBank bank(c, T, reps, 1);
  std::vector<InfluencePolicy> grid;
  for (double b : control::make_grid(0.0, 0.99, 0.01)) grid.emplace_back(policy::Constant{b});
  row("evaluate 100 betas", [&](mc::Exec e) { mc::evaluate(bank, c, grid, false, e); });

  std::vector<InfluencePolicy> prof;
  for (double k : control::make_grid(0.001, 0.1, 0.001)) prof.emplace_back(policy::DistanceProfile{k});
  row("evaluate 100 profiles", [&](mc::Exec e) { mc::evaluate(bank, c, prof, false, e); });

  row("phase diagram 19x26", [&](mc::Exec e) {
    control::phase_diagram(control::make_grid(0.05, 0.95, 0.05), control::make_grid(0.0, 0.25, 0.01), 30, e);
  });
  return 0;
}
