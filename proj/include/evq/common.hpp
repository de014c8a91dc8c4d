#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace evq {

/// Fifteen-minute slots in one day.
inline constexpr std::size_t kSlotsPerDay = 96;

/// Slots per hour; kW over one slot divided by this gives kWh.
inline constexpr double kSlotsPerHour = 4.0;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Error kinds raised by the toolkit. Callers that only care about failure
// catch evq::Error.
class SchemaError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class StatsError : public Error { using Error::Error; };
class EpisodeError : public Error { using Error::Error; };
class LifecycleError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class OracleError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class RowError : public Error {
public:
    RowError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// One day of per-slot average power readings in kW.
using SlotSeries = std::array<double, kSlotsPerDay>;

inline double series_sum(std::span<const double> s) {
    return std::accumulate(s.begin(), s.end(), 0.0);
}

inline bool all_finite(std::span<const double> s) {
    for (double v : s)
        if (!std::isfinite(v)) return false;
    return true;
}

enum class Action : int { idle = 0, charge = 1 };

inline constexpr bool charging(Action a) { return a == Action::charge; }

} // namespace evq
