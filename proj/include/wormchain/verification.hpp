#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace wormchain {

/// Neumaier-compensated running sum.
class CompensatedSum {
  public:
    void add(double value) noexcept {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) {
            carry_ += (sum_ - t) + value;
        } else {
            carry_ += (value - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double value) noexcept {
        add(value);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

  private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// One checked inequality or identity: passed iff lhs <= rhs (for identities lhs is an error, rhs a tolerance).
struct Check {
    std::string name;
    bool passed = true;
    double lhs = 0;
    double rhs = 0;
    std::string detail;
};

/// a <= b up to a relative slack for rounding in the last few bits.
inline bool leq_rel(double a, double b, double rel = 1e-12) { return a <= b + rel * std::max(std::abs(a), std::abs(b)); }

struct VerificationRecord {
    std::vector<Check> checks;

    Check& add(std::string name, double lhs, double rhs, std::string detail = {}) {
        checks.push_back({std::move(name), lhs <= rhs, lhs, rhs, std::move(detail)});
        return checks.back();
    }
    /// lhs <= rhs with relative rounding slack.
    Check& add_rel(std::string name, double lhs, double rhs, std::string detail = {}) {
        checks.push_back({std::move(name), leq_rel(lhs, rhs), lhs, rhs, std::move(detail)});
        return checks.back();
    }
    Check& add_flag(std::string name, bool ok, std::string detail = {}) {
        checks.push_back({std::move(name), ok, ok ? 0.0 : 1.0, 0.0, std::move(detail)});
        return checks.back();
    }
    [[nodiscard]] bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    void append(const VerificationRecord& other, const std::string& prefix = {}) {
        for (Check c : other.checks) {
            c.name = prefix + c.name;
            checks.push_back(std::move(c));
        }
    }
};

}  // namespace wormchain
