# Shapiro-Wilk W test, Royston's AS R94 approximation (3 <= n <= 5000).
#
# The a-coefficients come from Royston's polynomial corrections to the
# normal order-statistic means; the p-value uses the three-regime normal
# approximation (exact for n = 3, log-gamma transform for 4 <= n <= 11,
# log-log transform for n >= 12).

from __future__ import annotations

import math
from statistics import NormalDist

_NORM = NormalDist()

# Royston (1995) polynomial coefficients, highest degree first.
_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_C3 = (-0.0006714, 0.025054, -0.39978, 0.544)
_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_C6 = (0.0030302, -0.082676, -0.4803)
_G = (0.459, -2.273)

_PI6 = 6.0 / math.pi
_STQR = math.asin(math.sqrt(0.75))


def _polyval(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def swilk(sample) -> tuple[float, float]:
    """Return (W, p) for an unsorted numeric sample."""
    x = sorted(float(v) for v in sample)
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if n > 5000:
        raise ValueError(f"sample too large for AS R94 ({n} > 5000)")
    rng = x[-1] - x[0]
    if rng <= 0:
        raise ValueError("constant sample has zero variance")

    # Blom-scored normal order statistic means.
    m = [_NORM.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    ssq_m = sum(v * v for v in m)
    rsn = 1.0 / math.sqrt(n)

    a = [v / math.sqrt(ssq_m) for v in m]
    if n > 5:
        a_n = _polyval(_C1, rsn) + a[-1]
        a_n1 = _polyval(_C2, rsn) + a[-2]
        phi = (ssq_m - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        inner = [v / math.sqrt(phi) for v in m[2:-2]]
        a = [-a_n, -a_n1, *inner, a_n1, a_n]
    elif n > 3:
        a_n = _polyval(_C1, rsn) + a[-1]
        phi = (ssq_m - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        inner = [v / math.sqrt(phi) for v in m[1:-1]]
        a = [-a_n, *inner, a_n]

    mean = math.fsum(x) / n
    ssq = math.fsum((v - mean) ** 2 for v in x)
    if ssq <= 0:
        raise ValueError("constant sample has zero variance")
    num = math.fsum(ai * xi for ai, xi in zip(a, x))
    w = min(1.0, num * num / ssq)

    if n == 3:
        pw = _PI6 * (math.asin(math.sqrt(w)) - _STQR)
        return w, min(1.0, max(0.0, pw))

    w1 = 1.0 - w
    if n <= 11:
        gamma = _polyval(_G, n)
        if gamma - math.log(w1) <= 0:
            return w, 1e-99
        y = -math.log(gamma - math.log(w1))
        mu = _polyval(_C3, n)
        sigma = math.exp(_polyval(_C4, n))
    else:
        y = math.log(w1)
        ln_n = math.log(n)
        mu = _polyval(_C5, ln_n)
        sigma = math.exp(_polyval(_C6, ln_n))
    z = (y - mu) / sigma
    return w, 1.0 - _NORM.cdf(z)
