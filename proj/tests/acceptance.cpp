/*
 * Copyright 2026 The LanForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "criteria.hpp"

using namespace lanforge::testing;

namespace {

// Pinned tolerances.
constexpr int kInvariantCases = 1000;
constexpr double kInvariantSeconds = 30.0;
constexpr int kRuntimeMaxAgents = 4;
constexpr int kInitCases = 1000;
constexpr std::uint64_t kSeed = 20260101;

int failures = 0;

void report(const char* name, const std::function<CheckResult()>& check, double limit_seconds = 0) {
    auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = check();
    } catch (const std::exception& e) {
        r.expect(false, std::string("uncaught: ") + e.what());
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = limit_seconds <= 0 || seconds < limit_seconds;
    bool pass = r.ok() && in_time;
    if (!pass) ++failures;
    std::printf("%s %-22s %ld checks, %ld failed, %.2fs", pass ? "PASS" : "FAIL", name, r.cases, r.failures, seconds);
    if (limit_seconds > 0) std::printf(" (limit %.0fs)", limit_seconds);
    if (!r.first_failure.empty()) std::printf("; first failure: %s", r.first_failure.c_str());
    if (!in_time) std::printf("; too slow");
    std::printf("\n");
    std::fflush(stdout);
}

}  // namespace

int main() {
    report("invariant-suite", [] { return invariant_suite(kInvariantCases, kSeed); }, kInvariantSeconds);
    report("runtime-semantics", [] { return runtime_semantics(kRuntimeMaxAgents); });
    report("format-repair", [] { return format_repair(); });
    report("scenario-replay", [] { return scenario_replay(); });
    report("consistency-harness", [] { return consistency_harness(); });
    report("pipeline-routing", [] { return routing_table(); });
    report("service-contract", [] { return service_contract(); });
    report("init-contract", [] { return init_contract(kInitCases, kSeed); });
    return failures == 0 ? 0 : 1;
}
