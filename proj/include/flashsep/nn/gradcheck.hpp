// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference verification of every hand-derived gradient,
// in double precision.
//
// All losses are piecewise quadratic in any single parameter, so a central
// difference is exact up to rounding inside one linear region of the leaky
// rectifiers. Probes whose ±h perturbation flips any activation sign are
// counted as kink crossings and skipped.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flashsep::nn {

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // kink crossings
  double max_rel_error = 0.0;
};

struct GradcheckOptions {
  double step = 1e-3;
  int size = 8;                        // square input extent
  std::vector<int> channels = {1, 1, 1};  // micro-net width per level
  double threshold = 1e-3;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double threshold = 1e-3;
  bool passed() const;
  std::string format() const;
};

/// |a - n| / max(|a|, |n|); 0 when both are below 1e-10.
double relative_error(double analytic, double numeric);

GradcheckReport run_gradcheck(const GradcheckOptions& opt = {});

}  // namespace flashsep::nn
