"""Independent reference implementations used as test oracles.

Everything here is deliberately written in plain scalar Python (recursion,
explicit enumeration, straight loops) so it shares no code path with the
vectorized library. Oracles stay independent of what they check.
"""

from __future__ import annotations

import itertools
import math


def ref_upper_expectation(values, depth: int) -> float:
    """Recursive scalar version of the backward DP over adapted controls.

    values: sequence of 4**depth leaf values in lattice child order.
    """

    def go(index: int, level: int) -> float:
        if level == depth:
            return float(values[index])
        base = index * 4
        low = 0.5 * (go(base + 0, level + 1) + go(base + 1, level + 1))
        high = 0.5 * (go(base + 2, level + 1) + go(base + 3, level + 1))
        return max(low, high)

    return go(0, 0)


def ref_fixed_policy_expectation(values, depth: int, vol_choice) -> float:
    """Plain binomial expectation for one adapted policy.

    vol_choice(node_index, level) -> 0 (low) or 1 (high); node_index counts
    nodes at the given level in lattice order.
    """

    def go(index: int, level: int) -> float:
        if level == depth:
            return float(values[index])
        m = vol_choice(index, level)
        base = index * 4 + 2 * m
        return 0.5 * (go(base + 0, level + 1) + go(base + 1, level + 1))

    return go(0, 0)


def enumerate_adapted_policies(depth: int):
    """All adapted volatility policies for a small tree, as dicts
    (level, node_index) -> 0/1. Internal node count is (4**depth - 1)/3."""
    slots = [(level, idx) for level in range(depth) for idx in range(4**level)]
    for bits in itertools.product((0, 1), repeat=len(slots)):
        yield dict(zip(slots, bits))


def ref_enumerated_supremum(values, depth: int) -> float:
    """Max over every adapted policy of its expectation (small depths only)."""
    best = -math.inf
    for policy in enumerate_adapted_policies(depth):
        e = ref_fixed_policy_expectation(
            values, depth, lambda idx, lvl: policy[(lvl, idx)]
        )
        best = max(best, e)
    return best


def ref_bisect(f, lo: float, hi: float, tol: float = 1e-14) -> float:
    """Scalar bisection for an increasing f with f(lo) < 0 < f(hi)."""
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0.0 < f_hi):
        raise ValueError(f"not a bracket: f({lo})={f_lo}, f({hi})={f_hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def bachelier_call(std: float, strike: float) -> float:
    """E[(N(0, std^2) - strike)^+], closed form."""
    d = strike / std
    return std * norm_pdf(d) - strike * (1.0 - norm_cdf(d))


def expected_abs_normal(std: float) -> float:
    return std * math.sqrt(2.0 / math.pi)
