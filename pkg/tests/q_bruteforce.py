"""Breakpoint-enumeration brute force for the lowest uniform price q.

Independent of kes.baselines: evaluates the capped sum directly on every
segment between sorted breakpoints and takes the first (smallest) solution.
"""

from fractions import Fraction


def brute_force_min_q(cost_cents: int, supporters: list[tuple[Fraction, Fraction]]):
    """Smallest q with sum(min(q*u_i, b_i)) == cost, or None.

    ``supporters`` is a list of (utility, bucket) pairs in cents.
    """
    cost = Fraction(cost_cents)
    positive = [(u, b) for u, b in supporters if u > 0]

    def capped_sum(q: Fraction) -> Fraction:
        return sum((min(q * u, b) for u, b in positive), Fraction(0))

    total = sum((b for _, b in positive), Fraction(0))
    if not positive or total < cost:
        return None

    points = sorted({Fraction(0), *[b / u for u, b in positive]})
    for lo, hi in zip(points, points[1:]):
        f_lo, f_hi = capped_sum(lo), capped_sum(hi)
        if f_lo <= cost <= f_hi:
            if f_lo == cost:
                return lo
            return lo + (cost - f_lo) * (hi - lo) / (f_hi - f_lo)
    if total == cost:
        return points[-1]
    return None
