#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

/// Solves A x = b by Gaussian elimination with partial pivoting. A is row-major n×n.
/// Returns an empty vector when the system is singular.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, std::size_t n);

/// AR(p) coefficients on first differences via the normal equations XᵀX φ = Xᵀy.
std::vector<double> ar_fit(const std::vector<double>& series, int p);

/// ARIMA(p,1,0) h-step forecast built from ar_fit, integrated from the last observation.
std::vector<double> arima_forecast(const std::vector<double>& series, int p, int horizon);

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Worked examples for availability, admission, memory and cpu optimization, accounting,
/// retry escalation and forecasting, each compared against a hand-computed value.
std::vector<CheckOutcome> formula_examples();

struct PropertyReport {
    std::int64_t cases = 0;
    std::int64_t failures = 0;
    std::string first_failure;
};

/// Constant fixpoint, arithmetic-progression linearity, horizon and clipping invariants and shift
/// invariance over randomized inputs; `cases` per property.
PropertyReport forecaster_properties(int cases, std::uint64_t seed);

/// Ownership monotonicity against adversarial callers, content-addressed round trip, and single-byte
/// tamper detection on disk; `cases` per property.
PropertyReport registry_properties(int cases, std::uint64_t seed);

} // namespace oracle
