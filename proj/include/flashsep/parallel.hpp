// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace flashsep {

/// Worker count from FLASHSEP_THREADS (0 or unset = hardware concurrency).
int thread_count();

/// Runs body(i) for i in [0, n). Items are split into contiguous chunks, one
/// per worker; each item must write only its own outputs so the result is
/// identical to a sequential loop.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace flashsep
