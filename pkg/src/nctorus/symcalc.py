"""Pseudodifferential symbols on the noncommutative 3-torus.

A resolvent term is

    coeff * xi1^e1 xi2^e2 xi3^e3 * k^K * B^m0 . w1 . B^m1 . ... . wl . B^ml

where B is the opaque resolvent letter b0 = (k^4 |xi|^2 + 1)^-1 (lambda is
fixed at -1 throughout) and the insertions w are products of modular-twisted
derivative words of k.  B commutes with k-powers and with nothing else, so
the canonical form keeps a single k-power on the far left.

The formal order of a term is |e| - 2*sum(m); the parametrix recursion
produces the graded parts b0, b1, b2 of the resolvent symbol, of orders
-2, -3, -4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

from .ncalg import INDICES, Coeff, ModularDeltaError, NCPoly, ONE

XI0 = (0, 0, 0)


class GradingError(AssertionError):
    """A term landed in a grading slot that disagrees with |xi| - 2*sum(m)."""


class ParametrixFailure(AssertionError):
    """The composed parametrix identity left a nonzero residual."""


class ResTerm(NamedTuple):
    """One canonical resolvent term."""

    coeff: Coeff
    xi: tuple          # (e1, e2, e3)
    kpow: int
    word: tuple        # (m0, ins1, m1, ..., insl, ml); ins = tuple of 'w' factors

    @property
    def bsum(self) -> int:
        return sum(self.word[0::2])

    @property
    def order(self) -> int:
        return sum(self.xi) - 2 * self.bsum

    @property
    def insertions(self) -> tuple:
        return self.word[1::2]

    def __repr__(self) -> str:
        from .textio import render_resterm_atoms

        return render_resterm_atoms(self.coeff, self.xi, term_atoms(self, with_k=True))


def canon_atoms(coeff: Coeff, xi, atoms) -> ResTerm | None:
    """Canonicalize a flat atom list into a ResTerm.

    Atoms: ('B', m) | ('k', m) | ('w', s6, derivs).  All k-powers migrate to
    the leftmost position; crossing a derivative word twists it, crossing a B
    is free.
    """
    if coeff.is_zero:
        return None
    rsum = 0
    rev = []
    for a in reversed(atoms):
        if a[0] == "k":
            rsum += a[1]
        elif a[0] == "B":
            if a[1]:
                rev.append(a)
        else:
            rev.append(("w", a[1] + rsum, a[2]))
    word: list = [0]
    for a in reversed(rev):
        if a[0] == "B":
            word[-1] += a[1]
        else:
            if len(word) > 1 and word[-1] == 0:
                word[-2] = word[-2] + (a,)
                continue
            word.append((a,))
            word.append(0)
    return ResTerm(coeff, tuple(xi), rsum, tuple(word))


def term_atoms(t: ResTerm, with_k: bool = True) -> list:
    """Flatten a canonical term back into an atom list."""
    atoms: list = []
    if with_k and t.kpow:
        atoms.append(("k", t.kpow))
    for pos, part in enumerate(t.word):
        if pos % 2 == 0:
            if part:
                atoms.append(("B", part))
        else:
            atoms.extend(part)
    return atoms


def merge_terms(terms: Iterable[ResTerm]) -> list[ResTerm]:
    acc: dict = {}
    for t in terms:
        if t is None or t.coeff.is_zero:
            continue
        key = (t.xi, t.kpow, t.word)
        prev = acc.get(key)
        tot = t.coeff if prev is None else prev + t.coeff
        if tot.is_zero:
            acc.pop(key, None)
        else:
            acc[key] = tot
    return [
        ResTerm(c, xi, kp, w)
        for (xi, kp, w), c in sorted(acc.items(), key=lambda kv: kv[0])
    ]


# ---------------------------------------------------------------------------
# derivatives of resolvent terms
# ---------------------------------------------------------------------------

def d_xi(i: int, t: ResTerm) -> list[ResTerm]:
    """Partial derivative in xi_i.

    The product rule across the word uses d_i B = -2 xi_i B k^4 B; the
    spliced k^4 then migrates to the prefix, twisting every insertion on its
    way (each collapsed B-group contributes -2m xi_i k^4 with the group power
    raised by one, since k^4 commutes with B).
    """
    out = []
    e = t.xi[i - 1]
    if e:
        xi = list(t.xi)
        xi[i - 1] -= 1
        out.append(ResTerm(t.coeff * e, tuple(xi), t.kpow, t.word))
    xi_up = list(t.xi)
    xi_up[i - 1] += 1
    xi_up = tuple(xi_up)
    for pos in range(0, len(t.word), 2):
        m = t.word[pos]
        if m == 0:
            continue
        neww = list(t.word)
        neww[pos] = m + 1
        for q in range(1, pos, 2):
            neww[q] = tuple(("w", f[1] + 4, f[2]) for f in neww[q])
        out.append(ResTerm(t.coeff * (-2 * m), xi_up, t.kpow + 4, tuple(neww)))
    return out


def d_delta(j: int, t: ResTerm) -> list[ResTerm]:
    """Apply delta_j by the Leibniz rule across the whole term.

    Requires untwisted insertions (s = 0 throughout); the resolvent letter
    differentiates as delta_j(B) = -|xi|^2 B delta_j(k^4) B.
    """
    atoms = term_atoms(t, with_k=True)
    for a in atoms:
        if a[0] == "w" and a[1] != 0:
            raise ModularDeltaError(
                "delta applied to a twisted insertion; apply deltas before ordering"
            )
    out: list[ResTerm] = []
    for p, a in enumerate(atoms):
        head, tail = atoms[:p], atoms[p + 1:]
        if a[0] == "w":
            mid = [("w", 0, (j,) + a[2])]
            out.append(canon_atoms(t.coeff, t.xi, head + mid + tail))
        elif a[0] == "k":
            m = a[1]
            rng = range(m) if m > 0 else range(-m)
            for i in rng:
                if m > 0:
                    mid = [("k", i), ("w", 0, (j,)), ("k", m - 1 - i)]
                    c = t.coeff
                else:
                    mid = [("k", -i - 1), ("w", 0, (j,)), ("k", m + i)]
                    c = -t.coeff
                out.append(canon_atoms(c, t.xi, head + mid + tail))
        else:  # B group
            m = a[1]
            for s in range(m):
                for c4 in range(4):
                    for l in INDICES:
                        xi = list(t.xi)
                        xi[l - 1] += 2
                        mid = [
                            ("B", s + 1),
                            ("k", c4),
                            ("w", 0, (j,)),
                            ("k", 3 - c4),
                            ("B", m - s),
                        ]
                        out.append(
                            canon_atoms(-t.coeff, tuple(xi), head + mid + tail)
                        )
    return merge_terms(out)


def _d_xi_multi(terms: list[ResTerm], ell: tuple) -> list[ResTerm]:
    for i in INDICES:
        for _ in range(ell[i - 1]):
            terms = merge_terms(s for t in terms for s in d_xi(i, t))
    return terms


def _multi_indices(total: int):
    for l1 in range(total + 1):
        for l2 in range(total - l1 + 1):
            yield (l1, l2, total - l1 - l2)


# ---------------------------------------------------------------------------
# the operator symbol
# ---------------------------------------------------------------------------

class QTerm(NamedTuple):
    """One graded summand of a polynomial symbol: xi-monomial times a word
    polynomial kept in the raw (unordered, untwisted) alphabet so that
    deltas may still act on it."""

    xi: tuple
    poly: NCPoly


def _ei(i: int, mult: int = 1) -> tuple:
    e = [0, 0, 0]
    e[i - 1] = mult
    return tuple(e)


def symbol_parts() -> dict[int, list[QTerm]]:
    """The graded symbol of P = k (sum_j delta_j^2) k^3 + sum_j k^3 delta_j(k^-2) delta_j k^3.

    Returned with concrete indices in the raw alphabet, one QTerm per
    xi-monomial, orders 2, 1, 0.
    """
    k1, k3, k4, km2 = NCPoly.k(1), NCPoly.k(3), NCPoly.k(4), NCPoly.k(-2)
    a2 = [QTerm(_ei(i, 2), k4) for i in INDICES]
    a1 = []
    a0 = NCPoly.zero()
    for i in INDICES:
        dk3 = k3.apply_delta(i)
        dkm2 = km2.apply_delta(i)
        a1.append(QTerm(_ei(i), 2 * (k1 * dk3) + k3 * dkm2 * k3))
        a0 = a0 + k1 * dk3.apply_delta(i) + k3 * dkm2 * dk3
    return {2: a2, 1: a1, 0: [QTerm(XI0, a0)]}


def symbol_P() -> tuple[NCPoly, NCPoly, NCPoly]:
    """Canonical (normal-ordered, sum-folded) display form of the three
    graded parts; the xi-monomial of part n is xi_j^n with the implicit sum.
    """
    parts = symbol_parts()
    out = []
    for order in (0, 1, 2):
        folded = _fold_qterms(parts[order])
        out.append(folded)
    return tuple(out)


def _fold_qterms(qts: list[QTerm]) -> NCPoly:
    """Fold three concrete-index copies into one sum-index NCPoly."""
    from .ncalg import SUM_INDEX

    acc = NCPoly.zero()
    for qt in qts:
        acc = acc + qt.poly.normal_order()
    # rename every concrete index to the summed placeholder and divide by 3
    renamed = []
    for coeff, word, _si in acc:
        neww = tuple(
            f if f[0] == "k" else ("w", f[1], tuple(SUM_INDEX for _ in f[2]))
            for f in word
        )
        renamed.append((coeff / 3, neww, True))
    folded = NCPoly.from_terms(renamed)
    if folded.expand_sum_index() != acc:
        raise AssertionError("graded part is not symmetric under index permutation")
    return folded


# ---------------------------------------------------------------------------
# symbol composition and the resolvent recursion
# ---------------------------------------------------------------------------

def mul_resterm_poly(t: ResTerm, xi_q: tuple, poly: NCPoly, extra_b0: bool = False):
    """Right-multiply a resolvent term by an xi-monomial times a word
    polynomial (and optionally by a trailing B)."""
    xi = tuple(a + b for a, b in zip(t.xi, xi_q))
    base = term_atoms(t, with_k=True)
    tail = [("B", 1)] if extra_b0 else []
    out = []
    for c, w, si in poly:
        if si:
            raise ValueError("expand sum indices before composing")
        out.append(canon_atoms(t.coeff * c, xi, base + list(w) + tail))
    return out


def compose(
    p_parts: dict[int, list[ResTerm]],
    q_parts: dict[int, list[QTerm]],
    min_order: int,
) -> dict[int, list[ResTerm]]:
    """Symbol product  sum_l (1/l!) d_xi^l (p) delta^l (q), graded and
    truncated below ``min_order``.

    Buckets are keyed by graded slot p-order + q-weight - |l|.  With lambda
    fixed at -1 the weight-2 slot of the resolvent equation holds a2 + 1, so
    a bucket may mix formal xi-orders; each term's own order is still checked
    against its xi-degree bookkeeping.
    """
    out: dict[int, list] = {}
    for po, pterms in p_parts.items():
        # cache xi-derivative lists of this part by multi-index
        dcache: dict[tuple, list[ResTerm]] = {XI0: pterms}
        for qweight, qterms in q_parts.items():
            lmax = po + qweight - min_order
            if lmax < 0:
                continue
            for ltot in range(lmax + 1):
                for ell in _multi_indices(ltot):
                    if ell not in dcache:
                        dcache[ell] = _d_xi_multi(pterms, ell)
                    dp = dcache[ell]
                    if not dp:
                        continue
                    fact = Fraction(
                        1,
                        math.factorial(ell[0])
                        * math.factorial(ell[1])
                        * math.factorial(ell[2]),
                    )
                    bucket = out.setdefault(po + qweight - ltot, [])
                    for qt in qterms:
                        dq = qt.poly
                        for i in INDICES:
                            for _ in range(ell[i - 1]):
                                dq = dq.apply_delta(i)
                        if dq.is_zero:
                            continue
                        dq = dq.scale(Coeff(fact))
                        expect = po + sum(qt.xi) - ltot
                        for t in dp:
                            for prod in mul_resterm_poly(t, qt.xi, dq):
                                if prod is None:
                                    continue
                                if prod.order != expect:
                                    raise GradingError(
                                        f"term of order {prod.order}, expected {expect}"
                                    )
                                bucket.append(prod)
    return {o: merge_terms(ts) for o, ts in sorted(out.items(), reverse=True)}


B0_TERM = ResTerm(ONE, XI0, 0, (1,))


def resolvent_terms(nmax: int = 2) -> dict[int, list[ResTerm]]:
    """Graded parts b_0 .. b_nmax of the resolvent symbol at lambda = -1.

    Recursion over 2 + j + |l| - m = n, 0 <= j < n, 0 <= m <= 2:
        b_n = - sum (1/l!) d_xi^l(b_j) delta^l(a_m) b_0.
    """
    a = symbol_parts()
    b: dict[int, list[ResTerm]] = {0: [B0_TERM]}
    dcaches: dict[int, dict] = {0: {XI0: b[0]}}
    for n in range(1, nmax + 1):
        terms: list[ResTerm] = []
        for j in range(n):
            dcache = dcaches[j]
            for m in (0, 1, 2):
                ltot = n - 2 - j + m
                if ltot < 0:
                    continue
                for ell in _multi_indices(ltot):
                    if ell not in dcache:
                        dcache[ell] = _d_xi_multi(b[j], ell)
                    dp = dcache[ell]
                    if not dp:
                        continue
                    fact = Fraction(
                        -1,
                        math.factorial(ell[0])
                        * math.factorial(ell[1])
                        * math.factorial(ell[2]),
                    )
                    for qt in a[m]:
                        dq = qt.poly
                        for i in INDICES:
                            for _ in range(ell[i - 1]):
                                dq = dq.apply_delta(i)
                        if dq.is_zero:
                            continue
                        dq = dq.scale(Coeff(fact))
                        for t in dp:
                            for prod in mul_resterm_poly(t, qt.xi, dq, extra_b0=True):
                                if prod is None:
                                    continue
                                if prod.order != -2 - n:
                                    raise GradingError(
                                        f"b_{n} term of order {prod.order}"
                                    )
                                terms.append(prod)
        b[n] = merge_terms(terms)
        dcaches[n] = {XI0: b[n]}
    return b


# ---------------------------------------------------------------------------
# reduction by the defining relation of B and the parametrix check
# ---------------------------------------------------------------------------

def breduce(terms: list[ResTerm]) -> list[ResTerm]:
    """Rewrite k^4 |xi|^2 B^m ... = B^(m-1) ... - B^m ... to a normal form.

    Repeatedly splits each group's xi-polynomial as P = |xi|^2 Q + R (R has
    xi_1-degree <= 1) and pushes Q down against the leading B.  Terminates
    because the total xi-degree strictly drops.
    """
    pending = list(terms)
    done: list[ResTerm] = []
    while pending:
        groups: dict = {}
        for t in merge_terms(pending):
            groups.setdefault((t.kpow, t.word), {})[t.xi] = t.coeff
        pending = []
        for (kpow, word), xipoly in groups.items():
            if word[0] == 0:
                done.extend(ResTerm(c, e, kpow, word) for e, c in xipoly.items())
                continue
            P = dict(xipoly)
            Q: dict = {}
            while True:
                cand = [e for e, c in P.items() if not c.is_zero and e[0] >= 2]
                if not cand:
                    break
                e = max(cand)
                c = P[e]
                e0 = (e[0] - 2, e[1], e[2])
                Q[e0] = Q.get(e0, Coeff(Fraction(0))) + c
                for sh in ((2, 0, 0), (0, 2, 0), (0, 0, 2)):
                    ee = (e0[0] + sh[0], e0[1] + sh[1], e0[2] + sh[2])
                    P[ee] = P.get(ee, Coeff(Fraction(0))) - c
            done.extend(
                ResTerm(c, e, kpow, word) for e, c in P.items() if not c.is_zero
            )
            if Q:
                lowered = (word[0] - 1,) + word[1:]
                for e, c in Q.items():
                    if c.is_zero:
                        continue
                    pending.append(ResTerm(c, e, kpow - 4, lowered))
                    pending.append(ResTerm(-c, e, kpow - 4, word))
    return merge_terms(done)


@dataclass
class ParametrixReport:
    orders: dict = field(default_factory=dict)    # order -> residual ResTerm list

    @property
    def ok(self) -> bool:
        unit = self.orders.get(0, [])
        if len(unit) != 1:
            return False
        t = unit[0]
        if not (t.coeff == ONE and t.xi == XI0 and t.kpow == 0 and t.word == (0,)):
            return False
        return not self.orders.get(-1) and not self.orders.get(-2)

    def summary(self) -> str:
        lines = []
        for o in sorted(self.orders, reverse=True):
            ts = self.orders[o]
            if o == 0:
                lines.append(f"order  0: {len(ts)} term(s): " + "; ".join(map(repr, ts)))
            else:
                lines.append(f"order {o}: {len(ts)} residual term(s)")
        return "\n".join(lines)


def verify_parametrix(b: dict[int, list[ResTerm]] | None = None) -> ParametrixReport:
    """Check that (b0+b1+b2) composed with the symbol of P - lambda is
    1 + O(order -3), exactly, for symbolic k.  Raises ParametrixFailure on a
    nonzero residual."""
    if b is None:
        b = resolvent_terms(2)
    p_parts = {-2 - n: ts for n, ts in b.items()}
    q_parts = dict(symbol_parts())
    # -lambda = +1 lives in the weight-2 slot alongside a2
    q_parts[2] = q_parts[2] + [QTerm(XI0, NCPoly.one())]
    res = compose(p_parts, q_parts, min_order=-2)
    report = ParametrixReport({o: breduce(ts) for o, ts in res.items() if o >= -2})
    if not report.ok:
        raise ParametrixFailure("parametrix residual nonzero:\n" + report.summary())
    return report
