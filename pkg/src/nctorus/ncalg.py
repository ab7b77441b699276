"""Exact noncommutative word algebra for the Weyl factor k.

Elements are finite sums of monomials

    coeff * f_1 . f_2 . ... . f_n

where each factor f is either an integer power of the positive invertible
generator k, or a modular-twisted derivative word

    D^(s) [d_{j1} d_{j2} ... k]     (s a multiple of 1/6),

i.e. Delta^s applied to an iterated derivative delta_{j1}(delta_{j2}(... k)).
The modular operator satisfies Delta(x) = k^-6 x k^6, so k-powers can always
be moved to the front of a word at the cost of twisting every factor they
cross:  x k^n = k^n Delta^(n/6)(x).  Canonical form is "k-leftmost": one
optional leading k-power followed by twisted derivative words only.

Derivative words of k^-1 are expanded away at construction time through
delta_j(k^-1) = -k^-1 delta_j(k) k^-1, so the canonical alphabet only ever
contains derivative words of k itself.

Coefficients are exact: rationals times an integer power of sqrt(pi).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

#: sentinel derivative index for a monomial that carries an implicit
#: sum over the three torus directions (printed as "j")
SUM_INDEX = 0

INDICES = (1, 2, 3)


class ModularDeltaError(ValueError):
    """delta_j applied to a Delta-twisted factor (the two do not commute)."""


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Coeff:
    """Exact scalar q * pi^(pih/2) with q rational."""

    q: Fraction
    pih: int = 0

    def __post_init__(self):
        if not isinstance(self.q, Fraction):
            object.__setattr__(self, "q", Fraction(self.q))
        if self.q == 0:
            object.__setattr__(self, "pih", 0)

    @staticmethod
    def of(num, den=1, pih: int = 0) -> "Coeff":
        return Coeff(Fraction(num, den), pih)

    @property
    def is_zero(self) -> bool:
        return self.q == 0

    def __add__(self, other: "Coeff") -> "Coeff":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pih != other.pih:
            raise ValueError(
                f"cannot add pi^({self.pih}/2) and pi^({other.pih}/2) exactly"
            )
        return Coeff(self.q + other.q, self.pih)

    def __neg__(self) -> "Coeff":
        return Coeff(-self.q, self.pih)

    def __sub__(self, other: "Coeff") -> "Coeff":
        return self + (-other)

    def __mul__(self, other) -> "Coeff":
        if isinstance(other, Coeff):
            return Coeff(self.q * other.q, self.pih + other.pih)
        return Coeff(self.q * Fraction(other), self.pih)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Coeff":
        if isinstance(other, Coeff):
            if other.is_zero:
                raise ZeroDivisionError
            return Coeff(self.q / other.q, self.pih - other.pih)
        return Coeff(self.q / Fraction(other), self.pih)

    def __float__(self) -> float:
        import math

        return float(self.q) * math.pi ** (self.pih / 2.0)

    def __str__(self) -> str:
        if self.pih == 0:
            return str(self.q)
        if self.pih == 1:
            tail = "sqrt(pi)"
        elif self.pih == 2:
            tail = "pi"
        else:
            tail = f"pi^({Fraction(self.pih, 2)})"
        if self.q == 1:
            return tail
        if self.q == -1:
            return "-" + tail
        return f"{self.q}*{tail}"


ZERO = Coeff(Fraction(0))
ONE = Coeff(Fraction(1))


# ---------------------------------------------------------------------------
# factors and words
#
# A factor is a plain tuple, for cheap hashing:
#     ('k', m)            k^m, m != 0
#     ('w', s6, derivs)   Delta^(s6/6) applied to the derivative word
#                         delta_{derivs[0]}(delta_{derivs[1]}(... k)),
#                         derivs a nonempty tuple of indices (outermost first)
# A word is a tuple of factors; a term is (word, sum_index) -> Coeff.
# ---------------------------------------------------------------------------

def kf(m: int):
    return ("k", m)


def wf(s6: int, derivs) -> tuple:
    return ("w", s6, tuple(derivs))


def merge_kpows(word) -> tuple:
    """Drop k^0 factors and merge adjacent k-powers (no reordering)."""
    out = []
    for f in word:
        if f[0] == "k":
            if f[1] == 0:
                continue
            if out and out[-1][0] == "k":
                m = out[-1][1] + f[1]
                out.pop()
                if m:
                    out.append(("k", m))
                continue
        out.append(f)
    return tuple(out)


def word_normal_order(word) -> tuple[int, tuple]:
    """Move every k-power to the front of the word.

    Crossing a k^m to the left of a twisted word x costs x k^m = k^m D^(m/6)(x).
    Returns (total k exponent, tuple of twisted 'w' factors).
    """
    rsum = 0
    rev = []
    for f in reversed(word):
        if f[0] == "k":
            rsum += f[1]
        else:
            rev.append(("w", f[1] + rsum, f[2]))
    return rsum, tuple(reversed(rev))


def word_fourier_degree(word) -> int:
    """Total number of k letters, counting each derivative word as one."""
    deg = 0
    for f in word:
        deg += abs(f[1]) if f[0] == "k" else 1
    return deg


class NCPoly:
    """Finite sum of monomials, stored merged by word.

    Words are kept as constructed (possibly with interior k-powers); use
    :meth:`normal_order` to reach the k-leftmost canonical form.  Equality
    compares canonical forms.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms: dict = terms if terms is not None else {}

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_terms(items: Iterable[tuple[Coeff, tuple, bool]]) -> "NCPoly":
        acc: dict = {}
        for coeff, word, sum_index in items:
            if coeff.is_zero:
                continue
            key = (merge_kpows(word), bool(sum_index))
            prev = acc.get(key)
            tot = coeff if prev is None else prev + coeff
            if tot.is_zero:
                acc.pop(key, None)
            else:
                acc[key] = tot
        return NCPoly(acc)

    @staticmethod
    def zero() -> "NCPoly":
        return NCPoly({})

    @staticmethod
    def one(coeff: Coeff = ONE) -> "NCPoly":
        return NCPoly.from_terms([(coeff, (), False)])

    @staticmethod
    def k(m: int, coeff: Coeff = ONE) -> "NCPoly":
        return NCPoly.from_terms([(coeff, (kf(m),), False)])

    @staticmethod
    def dword(derivs, s6: int = 0, coeff: Coeff = ONE, sum_index=False) -> "NCPoly":
        return NCPoly.from_terms([(coeff, (wf(s6, derivs),), sum_index)])

    # -- ring structure ----------------------------------------------------

    def __iter__(self) -> Iterator[tuple[Coeff, tuple, bool]]:
        for (word, si), coeff in self.terms.items():
            yield coeff, word, si

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "NCPoly") -> "NCPoly":
        return NCPoly.from_terms(list(self) + list(other))

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + (-1) * other

    def __neg__(self) -> "NCPoly":
        return (-1) * self

    def __mul__(self, other) -> "NCPoly":
        if isinstance(other, NCPoly):
            out = []
            for ca, wa, sa in self:
                for cb, wb, sb in other:
                    if sa and sb:
                        raise ValueError(
                            "product of two sum-index monomials is ambiguous; "
                            "expand one side first"
                        )
                    out.append((ca * cb, wa + wb, sa or sb))
            return NCPoly.from_terms(out)
        return self.scale(other)

    def __rmul__(self, other) -> "NCPoly":
        return self.scale(other)

    def scale(self, c) -> "NCPoly":
        cc = c if isinstance(c, Coeff) else Coeff(Fraction(c))
        return NCPoly.from_terms((cc * coeff, word, si) for coeff, word, si in self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NCPoly):
            return NotImplemented
        return self.normal_order().terms == other.normal_order().terms

    def __hash__(self):
        return hash(frozenset(self.normal_order().terms.items()))

    def __repr__(self) -> str:
        from .textio import render_poly

        return render_poly(self)

    # -- the four rewriting operations --------------------------------------

    def apply_delta(self, j: int) -> "NCPoly":
        """Apply the derivation delta_j by the Leibniz rule.

        k-powers expand through delta_j(k^m) = sum_i k^i delta_j(k) k^(m-1-i)
        and delta_j(k^-1) = -k^-1 delta_j(k) k^-1.  Twisted factors (s != 0)
        are rejected: delta_j and Delta^s only commute for constant k.
        """
        if j not in INDICES:
            raise ValueError(f"derivative index must be one of {INDICES}, got {j}")
        out = []
        for coeff, word, si in self:
            for p, f in enumerate(word):
                head, tail = word[:p], word[p + 1:]
                if f[0] == "w":
                    if f[1] != 0:
                        raise ModularDeltaError(
                            f"delta_{j} applied to twisted factor D^({Fraction(f[1], 6)})[...]"
                        )
                    out.append((coeff, head + (wf(0, (j,) + f[2]),) + tail, si))
                else:
                    m = f[1]
                    if m > 0:
                        for i in range(m):
                            mid = (kf(i), wf(0, (j,)), kf(m - 1 - i))
                            out.append((coeff, head + mid + tail, si))
                    else:
                        for i in range(-m):
                            mid = (kf(-i - 1), wf(0, (j,)), kf(m + i))
                            out.append((-coeff, head + mid + tail, si))
        return NCPoly.from_terms(out)

    def apply_modular(self, s6: int) -> "NCPoly":
        """Apply Delta^(s6/6); distributes over factors and fixes k-powers."""
        out = []
        for coeff, word, si in self:
            neww = tuple(
                f if f[0] == "k" else ("w", f[1] + s6, f[2]) for f in word
            )
            out.append((coeff, neww, si))
        return NCPoly.from_terms(out)

    def normal_order(self) -> "NCPoly":
        """k-leftmost canonical form; idempotent."""
        out = []
        for coeff, word, si in self:
            kp, rest = word_normal_order(word)
            neww = ((kf(kp),) if kp else ()) + rest
            out.append((coeff, neww, si))
        return NCPoly.from_terms(out)

    def expand_sum_index(self) -> "NCPoly":
        """Replace each implicit-sum monomial by its three concrete copies."""
        out = []
        for coeff, word, si in self:
            if not si:
                out.append((coeff, word, False))
                continue
            for i in INDICES:
                neww = tuple(
                    f if f[0] == "k"
                    else ("w", f[1], tuple(i if d == SUM_INDEX else d for d in f[2]))
                    for f in word
                )
                out.append((coeff, neww, False))
        return NCPoly.from_terms(out)

    def commutative_image(self) -> "CommPoly":
        """Drop modular twists and let factors commute."""
        out = []
        for coeff, word, si in self:
            kp = 0
            dws = []
            for f in word:
                if f[0] == "k":
                    kp += f[1]
                else:
                    dws.append(("k", f[2]))
            out.append((coeff, kp, tuple(sorted(dws)), si))
        return CommPoly.from_terms(out)

    def max_delta_depth(self) -> int:
        depth = 0
        for _, word, _ in self:
            for f in word:
                if f[0] == "w":
                    depth = max(depth, len(f[2]))
        return depth


# ---------------------------------------------------------------------------
# commutative image
# ---------------------------------------------------------------------------

class CommPoly:
    """Commutative polynomial in k^±1 and derivative words of k or of log k.

    Terms are keyed by (k-power, sorted tuple of (base, derivs), sum_index)
    with base 'k' for derivative words of k and 'x' for words of log k.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def from_terms(items) -> "CommPoly":
        acc: dict = {}
        for coeff, kp, dws, si in items:
            if coeff.is_zero:
                continue
            key = (kp, tuple(sorted(dws)), bool(si))
            prev = acc.get(key)
            tot = coeff if prev is None else prev + coeff
            if tot.is_zero:
                acc.pop(key, None)
            else:
                acc[key] = tot
        return CommPoly(acc)

    def __iter__(self):
        for (kp, dws, si), coeff in self.terms.items():
            yield coeff, kp, dws, si

    def __len__(self):
        return len(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "CommPoly") -> "CommPoly":
        return CommPoly.from_terms(list(self) + list(other))

    def __sub__(self, other: "CommPoly") -> "CommPoly":
        return CommPoly.from_terms(
            list(self) + [(-c, kp, dws, si) for c, kp, dws, si in other]
        )

    def scale(self, c: Coeff) -> "CommPoly":
        return CommPoly.from_terms((c * coeff, kp, dws, si) for coeff, kp, dws, si in self)

    def __eq__(self, other):
        if not isinstance(other, CommPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        from .textio import render_commpoly

        return render_commpoly(self)

    def to_log_form(self) -> "CommPoly":
        """Rewrite derivative words of k in terms of log k.

        Uses delta_i(k) = k delta_i(log k) and
        delta_i(delta_j(k)) = k delta_i(log k) delta_j(log k)
                              + k delta_i(delta_j(log k)).
        Only depth <= 2 words appear in the curvature pipeline.
        """
        out = CommPoly()
        for coeff, kp, dws, si in self:
            # each monomial expands to a product of small sums
            parts = [(coeff, kp, [])]
            for base, derivs in dws:
                if base != "k":
                    parts = [(c, p, d + [(base, derivs)]) for c, p, d in parts]
                    continue
                if len(derivs) == 1:
                    parts = [(c, p + 1, d + [("x", derivs)]) for c, p, d in parts]
                elif len(derivs) == 2:
                    i, j = derivs
                    nxt = []
                    for c, p, d in parts:
                        nxt.append((c, p + 1, d + [("x", (i,)), ("x", (j,))]))
                        nxt.append((c, p + 1, d + [("x", derivs)]))
                    parts = nxt
                else:
                    raise NotImplementedError(
                        "log substitution implemented for depth <= 2 only"
                    )
            out = out + CommPoly.from_terms(
                (c, p, tuple(sorted(d)), si) for c, p, d in parts
            )
        return out


# ---------------------------------------------------------------------------
# free functions mirroring the operation names used across the package
# ---------------------------------------------------------------------------

def nc_mul(a: NCPoly, b: NCPoly) -> NCPoly:
    return a * b


def apply_delta(j: int, a: NCPoly) -> NCPoly:
    return a.apply_delta(j)


def apply_modular(s6: int, a: NCPoly) -> NCPoly:
    return a.apply_modular(s6)


def normal_order(a: NCPoly) -> NCPoly:
    return a.normal_order()


def commutative_image(a: NCPoly) -> CommPoly:
    return a.commutative_image()
