#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gemtl {

/// Operand extents or orders are incompatible with the requested operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration value is outside its documented range.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, double loss)
        : std::runtime_error("loss became non-finite (" + std::to_string(loss) + ") at epoch " +
                             std::to_string(epoch)),
          epoch_(epoch) {}

    [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace gemtl
