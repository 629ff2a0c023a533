#pragma once

namespace divkernel {

/// psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic series.
double digamma(double x);

/// psi'(x) for x > 0, same scheme.
double trigamma(double x);

}  // namespace divkernel
