#pragma once

#include <cmath>
#include <compare>
#include <string>

#include "gexlab/error.hpp"

namespace gexlab {

/// A value in (-inf, +inf]. Positive infinity is a distinguished state, not a
/// large float, so minimisations and sums never confuse it with data.
class Extended {
public:
    constexpr Extended() = default;

    /// Finite values only; use infinity() for +inf.
    Extended(double value) : value_(value) {  // NOLINT(google-explicit-constructor)
        if (!std::isfinite(value))
            fail(ErrorCode::InvalidArgument, "Extended: non-finite value " + std::to_string(value));
    }

    static constexpr Extended infinity() {
        Extended e;
        e.infinite_ = true;
        return e;
    }

    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_infinite() const { return infinite_; }

    /// Underlying finite value; throws on +inf.
    double value() const {
        if (infinite_) fail(ErrorCode::Domain, "Extended: value() of +inf");
        return value_;
    }

    /// IEEE view for printing and tolerance checks.
    double to_double() const { return infinite_ ? HUGE_VAL : value_; }

    std::string to_string() const;

    friend Extended operator+(Extended a, Extended b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return Extended(a.value_ + b.value_);
    }
    Extended& operator+=(Extended other) { return *this = *this + other; }

    /// Scaling by a nonnegative factor; 0 * inf = 0 (measure-theoretic convention).
    friend Extended scale(double factor, Extended a) {
        if (factor < 0.0) fail(ErrorCode::InvalidArgument, "Extended: negative scale factor");
        if (a.infinite_) return factor == 0.0 ? Extended(0.0) : infinity();
        return Extended(factor * a.value_);
    }

    friend bool operator==(const Extended& a, const Extended& b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }
    friend std::partial_ordering operator<=>(const Extended& a, const Extended& b) {
        if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
        if (a.infinite_) return std::partial_ordering::greater;
        if (b.infinite_) return std::partial_ordering::less;
        return a.value_ <=> b.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

inline Extended min(Extended a, Extended b) { return b < a ? b : a; }
inline Extended max(Extended a, Extended b) { return a < b ? b : a; }

/// "inf" for +inf, shortest round-trip decimal otherwise.
std::string format_real(double value);

inline std::string Extended::to_string() const {
    return infinite_ ? std::string("inf") : format_real(value_);
}

}  // namespace gexlab
