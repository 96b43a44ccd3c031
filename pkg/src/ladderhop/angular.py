"""Clebsch-Gordan coefficients <F_g, m; 1, p | F_e, m+p> and lookup tables.

Spins and magnetic quantum numbers are plain floats holding integers or
half-integers (exact in binary floating point).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, sqrt

import numpy as np

from ladderhop.errors import DomainError

POLARIZATIONS = (-1, 0, 1)


def _twice(x: float, what: str) -> int:
    """Return 2x as an int, or raise if x is not a (half-)integer."""
    tx = round(2 * x)
    if abs(2 * x - tx) > 1e-9:
        raise DomainError(f"{what}={x!r} is not an integer or half-integer")
    return tx


def _check_spin(j: float, what: str) -> int:
    tj = _twice(j, what)
    if tj < 0:
        raise DomainError(f"{what}={j!r} is negative")
    return tj


def magnetic_numbers(j: float) -> np.ndarray:
    """m = -j, -j+1, ..., j."""
    tj = _check_spin(j, "spin")
    return (np.arange(tj + 1) * 2 - tj) / 2.0


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j: float, m: float) -> float:
    """<j1 m1; j2 m2 | j m> from the Racah closed-form sum (Condon-Shortley phase)."""
    t1, t2, tj = _check_spin(j1, "j1"), _check_spin(j2, "j2"), _check_spin(j, "j")
    tm1, tm2, tm = _twice(m1, "m1"), _twice(m2, "m2"), _twice(m, "m")

    # selection rules short-circuit to an exact zero
    if tm1 + tm2 != tm:
        return 0.0
    if abs(tm1) > t1 or abs(tm2) > t2 or abs(tm) > tj:
        return 0.0
    if (t1 + tm1) % 2 or (t2 + tm2) % 2 or (tj + tm) % 2:
        return 0.0
    if tj < abs(t1 - t2) or tj > t1 + t2 or (t1 + t2 + tj) % 2:
        return 0.0

    # all factorial arguments below are integers: work with doubled quantities
    a = (tj + t1 - t2) // 2
    b = (tj - t1 + t2) // 2
    c = (t1 + t2 - tj) // 2
    d = (t1 + t2 + tj) // 2 + 1
    pref = (tj + 1) * factorial(a) * factorial(b) * factorial(c) / factorial(d)
    pref *= (
        factorial((tj + tm) // 2)
        * factorial((tj - tm) // 2)
        * factorial((t1 - tm1) // 2)
        * factorial((t1 + tm1) // 2)
        * factorial((t2 - tm2) // 2)
        * factorial((t2 + tm2) // 2)
    )

    kmin = max(0, (t2 - tj - tm1) // 2, (t1 - tj + tm2) // 2)
    kmax = min(c, (t1 - tm1) // 2, (t2 + tm2) // 2)
    total = 0.0
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial(c - k)
            * factorial((t1 - tm1) // 2 - k)
            * factorial((t2 + tm2) // 2 - k)
            * factorial((tj - t2 + tm1) // 2 + k)
            * factorial((tj - t1 - tm2) // 2 + k)
        )
        total += (-1) ** k / den
    return sqrt(pref) * total


def compute_cg(F_g: float, m: float, p: int, F_e: float) -> float:
    """C^p_m = <F_g, m; 1, p | F_e, m+p>.

    Returns exactly 0.0 outside the selection rules.
    """
    _check_spin(F_g, "F_g")
    _check_spin(F_e, "F_e")
    _twice(m, "m")
    if p not in POLARIZATIONS:
        raise DomainError(f"polarization p={p!r} must be -1, 0 or +1")
    return clebsch_gordan(F_g, m, 1.0, float(p), F_e, m + p)


@dataclass(frozen=True)
class CGTable:
    """Immutable table of C^p_m for one F_g -> F_e transition."""

    F_g: float
    F_e: float
    entries: dict = field(repr=False)

    def __call__(self, m: float, p: int) -> float:
        return self.entries.get((float(m), int(p)), 0.0)

    def nonzero(self, p: int | None = None) -> dict:
        return {k: v for k, v in self.entries.items() if v != 0.0 and (p is None or k[1] == p)}


def build_cg_table(F_g: float, F_e: float) -> CGTable:
    entries = {}
    for m in magnetic_numbers(F_g):
        for p in POLARIZATIONS:
            entries[(float(m), p)] = compute_cg(F_g, m, p, F_e)
    return CGTable(float(F_g), float(F_e), entries)
