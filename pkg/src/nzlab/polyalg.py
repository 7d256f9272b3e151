"""Sparse multivariate polynomials with scalar or array coefficients.

Coefficients may be numpy arrays; all arithmetic broadcasts, which lets one
polynomial carry a separate coefficient for every lattice point at once.
"""

from __future__ import annotations

from typing import Dict, Iterator, Tuple

import numpy as np

Exponent = Tuple[int, ...]


class Poly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Dict[Exponent, object] | None = None):
        self.nvars = nvars
        self.terms: Dict[Exponent, object] = dict(terms or {})

    @classmethod
    def constant(cls, nvars: int, c=1.0) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int, c=1.0) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): c})

    def copy(self) -> "Poly":
        return Poly(self.nvars, self.terms)

    def items(self) -> Iterator[Tuple[Exponent, object]]:
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def _accumulate(self, e: Exponent, c) -> None:
        if e in self.terms:
            self.terms[e] = self.terms[e] + c
        else:
            self.terms[e] = c

    def __add__(self, other: "Poly") -> "Poly":
        out = self.copy()
        for e, c in other.terms.items():
            out._accumulate(e, c)
        return out

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, c) -> "Poly":
        return Poly(self.nvars, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        out = Poly(self.nvars)
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out._accumulate(tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
        return out

    __rmul__ = __mul__

    def shift(self, exps: Exponent, c=1.0) -> "Poly":
        """Multiply by the monomial ``c * prod(v_i ** exps[i])``."""
        out = Poly(self.nvars)
        for e, v in self.terms.items():
            out._accumulate(tuple(a + b for a, b in zip(e, exps)), c * v)
        return out

    def mul_var(self, i: int, c=1.0) -> "Poly":
        e = [0] * self.nvars
        e[i] = 1
        return self.shift(tuple(e), c)

    def diff(self, i: int) -> "Poly":
        out = Poly(self.nvars)
        for e, c in self.terms.items():
            k = e[i]
            if k == 0:
                continue
            e2 = list(e)
            e2[i] = k - 1
            out._accumulate(tuple(e2), k * c)
        return out

    def degree(self, i: int | None = None) -> int:
        if not self.terms:
            return 0
        if i is None:
            return max(sum(e) for e in self.terms)
        return max(e[i] for e in self.terms)

    def __call__(self, *values):
        """Evaluate; ``values`` broadcast against each other and the coefficients."""
        total = 0.0
        for e, c in self.terms.items():
            m = c
            for v, k in zip(values, e):
                if k:
                    m = m * np.asarray(v) ** k
            total = total + m
        return total
