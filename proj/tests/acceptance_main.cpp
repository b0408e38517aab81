// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Acceptance suite: runs every verification criterion at its pinned tolerance
// and prints one pass/fail line per criterion. Exits nonzero on any failure.

#include <cstdio>
#include <filesystem>

#include "retguide/selftest.hpp"

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    fs::path work = argc > 1 ? fs::path(argv[1])
                             : fs::temp_directory_path() / "retguide_acceptance";
    fs::remove_all(work);

    auto checks = retguide::run_all_checks(2026, work);
    int failures = 0;
    for (const auto& check : checks) {
        std::printf("%s  %-28s %7.2fs  %s\n", check.passed ? "PASS" : "FAIL",
                    check.name.c_str(), check.seconds, check.detail.c_str());
        failures += check.passed ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures,
                checks.size());
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}
