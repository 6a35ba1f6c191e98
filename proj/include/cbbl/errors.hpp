#ifndef CBBL_ERRORS_HPP
#define CBBL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cbbl {

// Invalid configuration or parameters (bad GridSpec, bad sweep, bad flags).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Input outside the mathematical domain of an operation
// (non-positive box side, non-overlapping boxes for the IoU loss).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Target outside the grid range, or index outside [0, n].
class RangeError : public DomainError {
public:
    explicit RangeError(const std::string& what) : DomainError(what) {}
};

// Non-finite loss, gradient or prediction during training.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int epoch)
        : std::runtime_error(what), epoch_(epoch) {}

    // Epoch in which the non-finite value appeared.
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace cbbl

#endif // CBBL_ERRORS_HPP
