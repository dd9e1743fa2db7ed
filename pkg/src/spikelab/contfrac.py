"""Continued fractions ``[0; n_1, n_2, ...]`` with exact convergents."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence


def convergents(partial_quotients: Sequence[int]) -> list[tuple[int, int]]:
    """``(p_i, q_i)`` for i = 1..len, seeded with p_0=0, q_0=1, p_{-1}=1, q_{-1}=0."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = []
    for n in partial_quotients:
        n = int(n)
        if n < 1:
            raise ValueError("partial quotients must be positive integers")
        p, p_prev = n * p + p_prev, p
        q, q_prev = n * q + q_prev, q
        out.append((p, q))
    return out


def cf_value(partial_quotients: Sequence[int]) -> Fraction:
    """Exact value of the finite continued fraction ``[0; n_1, ..., n_k]``."""
    if not partial_quotients:
        return Fraction(0)
    p, q = convergents(partial_quotients)[-1]
    return Fraction(p, q)


def golden_quotients(t_max: float, margin: float = 10.0) -> list[int]:
    """All-ones quotients, long enough that the truncation is invisible up to ``t_max``.

    The last denominator q satisfies ``log q >= t_max + margin``; before that
    time the flowed lattice of the truncation has no dip the true golden
    lattice lacks.
    """
    ones = []
    q_prev, q = 0, 1
    while math.log(q) < t_max + margin:
        ones.append(1)
        q, q_prev = q + q_prev, q
    return ones


def golden_fraction(t_max: float, margin: float = 10.0) -> Fraction:
    """Rational stand-in for ``(sqrt 5 - 1)/2`` valid on ``[0, t_max]``."""
    return cf_value(golden_quotients(t_max, margin))
