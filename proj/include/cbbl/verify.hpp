#ifndef CBBL_VERIFY_HPP
#define CBBL_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cbbl {

struct VerifyOptions {
    std::uint64_t seed = 0;
    int samples = 1000;
    // Test hook: corrupts one analytic gradient so the CE check must fail.
    bool inject_fault = false;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double max_error = 0.0;
    double tolerance = 0.0;
    int evaluated = 0;
};

// Runs the gradient and reconstruction checks: finite differences against
// every analytic gradient, offset round-trips, quantize/restore identities,
// grid symmetry and limits, and distortion-sweep identities.
// Throws ConfigError when samples < 1.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

} // namespace cbbl

#endif // CBBL_VERIFY_HPP
