"""Exact real numbers of the form ``sum_s q_s * sqrt(s)``.

``q_s`` are rationals and ``s`` ranges over distinct squarefree positive
integers.  Square roots of distinct squarefree integers are linearly
independent over the rationals, so the representation is canonical and
``== 0`` is exact.  This is the smallest field that holds every
coefficient ``rho(Λ)^{±d/2}`` produced by the operators when the spectral
radii are integers.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd
from numbers import Rational


@lru_cache(maxsize=4096)
def _split_square(n: int) -> tuple[int, int]:
    """``n == a*a*b`` with ``b`` squarefree; returns ``(a, b)``."""
    a, b, p = 1, 1, 2
    while p * p <= n:
        while n % (p * p) == 0:
            a *= p
            n //= p * p
        if n % p == 0:
            b *= p
            n //= p
        p += 1
    return a, b * n


_PRODUCTS: dict = {}


class Surd:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[int, Fraction] = {
            s: q if type(q) is Fraction else Fraction(q) for s, q in (terms or {}).items() if q
        }

    @classmethod
    def sqrt(cls, value) -> "Surd":
        value = Fraction(value)
        if value < 0:
            raise ValueError("square root of a negative number")
        if value == 0:
            return cls()
        num = value.numerator * value.denominator
        a, b = _split_square(num)
        return cls({b: Fraction(a, value.denominator)})

    @staticmethod
    def lift(x) -> "Surd":
        if isinstance(x, Surd):
            return x
        if isinstance(x, (int, Rational)):
            return Surd({1: Fraction(x)})
        return NotImplemented

    def __add__(self, other):
        lifted = Surd.lift(other)
        if lifted is NotImplemented:
            return float(self) + other
        out = dict(self.terms)
        for s, q in lifted.terms.items():
            out[s] = out.get(s, 0) + q
        return Surd(out)

    __radd__ = __add__

    def __neg__(self):
        return Surd({s: -q for s, q in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if type(other) is int and other == 1:
            return self
        if isinstance(other, (int, Rational)):
            return Surd({s: q * other for s, q in self.terms.items()})
        if not isinstance(other, Surd):
            return float(self) * other
        key = (self, other)
        hit = _PRODUCTS.get(key)
        if hit is not None:
            return hit
        out: dict[int, Fraction] = {}
        for s, p in self.terms.items():
            for t, q in other.terms.items():
                g = gcd(s, t)
                root = (s // g) * (t // g)
                out[root] = out.get(root, 0) + p * q * g
        hit = Surd(out)
        if len(_PRODUCTS) < 65536:
            _PRODUCTS[(self, other)] = hit
        return hit

    __rmul__ = __mul__

    def __truediv__(self, other):
        lifted = Surd.lift(other)
        if lifted is NotImplemented:
            return float(self) / other
        if not lifted.terms:
            raise ZeroDivisionError("surd division by zero")
        if len(lifted.terms) != 1:
            raise NotImplementedError("division by a multi-term surd")
        (s, q), = lifted.terms.items()
        # 1/(q sqrt(s)) = sqrt(s) / (q s)
        return self * Surd({s: 1 / (q * s)})

    def conjugate(self) -> "Surd":
        return self

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if type(other) is int:
            return self.terms == ({1: other} if other else {})
        lifted = Surd.lift(other)
        if lifted is NotImplemented:
            return float(self) == other
        return self.terms == lifted.terms

    def __hash__(self):
        if set(self.terms) <= {1}:
            return hash(self.terms.get(1, Fraction(0)))
        return hash(frozenset(self.terms.items()))

    def __float__(self):
        return float(sum(float(q) * (s ** 0.5) for s, q in self.terms.items()))

    def __abs__(self):
        return abs(float(self))

    def __complex__(self):
        return complex(float(self))

    def is_rational(self) -> bool:
        return set(self.terms) <= {1}

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.terms.get(1, Fraction(0))

    def __repr__(self):
        if not self.terms:
            return "Surd(0)"
        parts = [str(q) if s == 1 else f"{q}*sqrt({s})" for s, q in sorted(self.terms.items())]
        return "Surd(" + " + ".join(parts) + ")"

