"""Canonical text grammar for words, terms and golden files.

Grammar (one term per line in golden files):

    term   :=  coeff [ '*' atom ( '.' atom )* ]
    coeff  :=  rational [ '*' pipart ] ;  pipart in {pi, sqrt(pi), pi^(p/2)}
    atom   :=  'B' ['^' int]          resolvent letter b0 = (k^4 |xi|^2 + 1)^-1
            |  'k' ['^' int]          power of the Weyl factor
            |  'r^' int               power of the radial variable
            |  'xi' idx '^' int       power of a covariable component
            |  dfac
    dfac   :=  [ 'D^(' frac ')' ] '[' ('d' idx)+ base ']'
    base   :=  'k' | 'k^-1'
    idx    :=  '1' | '2' | '3' | 'j'  ('j' marks the implicit summed index)

Whitespace around '.' and inside brackets is free.  'D^(s)' is the modular
operator Delta raised to s (a multiple of 1/6); a missing 'D' means s = 0.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .ncalg import SUM_INDEX, Coeff, NCPoly


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def render_index(d: int) -> str:
    return "j" if d == SUM_INDEX else str(d)


def render_factor(f) -> str:
    if f[0] == "k":
        return "k" if f[1] == 1 else f"k^{f[1]}"
    s6, derivs = f[1], f[2]
    body = "[" + " ".join(f"d{render_index(d)}" for d in derivs) + " k]"
    if len(f) > 3 and f[3] == "kinv":
        body = body[:-2] + "k^-1]"
    if s6 == 0:
        return body
    return f"D^({Fraction(s6, 6)})" + body


def render_word(word) -> str:
    return " . ".join(render_factor(f) for f in word)


def render_term(coeff: Coeff, word) -> str:
    if not word:
        return str(coeff)
    return f"{coeff} * {render_word(word)}"


def render_poly(p: NCPoly) -> str:
    if p.is_zero:
        return "0"
    items = sorted(p.terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    return "  +  ".join(render_term(c, w) for (w, _si), c in items)


def render_commpoly(p) -> str:
    if p.is_zero:
        return "0"

    def fac(base, derivs):
        name = "k" if base == "k" else "log k"
        return "[" + " ".join(f"d{render_index(d)}" for d in derivs) + f" {name}]"

    lines = []
    for (kp, dws, _si), c in sorted(p.terms.items()):
        atoms = ([f"k^{kp}"] if kp else []) + [fac(b, d) for b, d in dws]
        lines.append(f"{c} * " + " . ".join(atoms) if atoms else str(c))
    return "  +  ".join(lines)


def render_resterm_atoms(coeff: Coeff, xi, atoms, rpow: int | None = None) -> str:
    """Render a resolvent/radial term from its flat atom list."""
    parts = []
    if rpow:
        parts.append(f"r^{rpow}")
    for i, e in enumerate(xi or ()):
        if e:
            parts.append(f"xi{i + 1}^{e}")
    for a in atoms:
        if a[0] == "B":
            parts.append("B" if a[1] == 1 else f"B^{a[1]}")
        else:
            parts.append(render_factor(a))
    if not parts:
        return str(coeff)
    return f"{coeff} * " + " . ".join(parts)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_COEFF_RE = re.compile(
    r"^\s*(?P<sign>[+-]?)\s*(?P<num>\d+)(?:\s*/\s*(?P<den>\d+))?"
    r"(?:\s*\*\s*(?P<pi>pi(?:\^\(\s*(?P<pp>-?\d+)\s*/\s*2\s*\))?|sqrt\(pi\)))?\s*$"
)

_DFAC_RE = re.compile(
    r"^(?:D\^\(\s*(?P<s>-?\d+(?:/\d+)?)\s*\))?"
    r"\[\s*(?P<ds>(?:d[123j]\s+)+)k(?P<inv>\^-1)?\s*\]$"
)


class ParseError(ValueError):
    pass


def parse_coeff(text: str) -> Coeff:
    m = _COEFF_RE.match(text)
    if not m:
        raise ParseError(f"bad coefficient: {text!r}")
    q = Fraction(int(m.group("num")), int(m.group("den") or 1))
    if m.group("sign") == "-":
        q = -q
    pi = m.group("pi")
    if pi is None:
        pih = 0
    elif pi == "sqrt(pi)":
        pih = 1
    elif pi == "pi":
        pih = 2
    else:
        pih = int(m.group("pp"))
    return Coeff(q, pih)


def _parse_index(ch: str) -> int:
    return SUM_INDEX if ch == "j" else int(ch)


def parse_atom(text: str):
    """Parse one atom into ('B', m) | ('k', m) | ('r', p) | ('xi', i, e)
    | ('w', s6, derivs, base)."""
    t = text.strip()
    if t == "B":
        return ("B", 1)
    m = re.match(r"^B\^(\d+)$", t)
    if m:
        return ("B", int(m.group(1)))
    if t == "k":
        return ("k", 1)
    m = re.match(r"^k\^(-?\d+)$", t)
    if m:
        return ("k", int(m.group(1)))
    m = re.match(r"^r\^(\d+)$", t)
    if m:
        return ("r", int(m.group(1)))
    m = re.match(r"^xi([123])\^(\d+)$", t)
    if m:
        return ("xi", int(m.group(1)), int(m.group(2)))
    m = _DFAC_RE.match(t)
    if m:
        s = Fraction(m.group("s")) if m.group("s") else Fraction(0)
        s6 = s * 6
        if s6.denominator != 1:
            raise ParseError(f"modular exponent not a multiple of 1/6: {text!r}")
        derivs = tuple(_parse_index(d[1]) for d in m.group("ds").split())
        base = "kinv" if m.group("inv") else "k"
        return ("w", int(s6), derivs, base)
    raise ParseError(f"bad atom: {text!r}")


def parse_term_line(line: str) -> tuple[Coeff, list]:
    """Parse one golden-file line into (coeff, atom list)."""
    line = line.strip()
    if "*" in line:
        # the coefficient may itself contain '*pi'; split at the first '*'
        # that is followed by an atom-looking token
        head, _, rest = line.partition("*")
        probe = rest.strip()
        if probe.startswith(("pi", "sqrt(pi)")):
            h2, _, rest = probe.partition("*")
            head = head + "*" + h2
        coeff = parse_coeff(head)
        atoms = [parse_atom(a) for a in rest.split(".")]
    else:
        coeff = parse_coeff(line)
        atoms = []
    return coeff, atoms


def parse_term_file(text: str) -> list[tuple[Coeff, list]]:
    """Parse a golden file: one term per line, '#' comments allowed."""
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_term_line(line))
    return out


def expand_kinv_atoms(coeff: Coeff, atoms) -> tuple[Coeff, list]:
    """Rewrite derivative words of k^-1 in the canonical alphabet.

    D^(s)[dj k^-1] = -k^-1 D^(s)[dj k] k^-1 (depth-1 words only, which is
    all the golden transcriptions contain).
    """
    out = []
    for a in atoms:
        if a[0] == "w" and len(a) > 3 and a[3] == "kinv":
            if len(a[2]) != 1:
                raise ParseError("k^-1 derivative words of depth > 1 unsupported")
            coeff = -coeff
            out.extend([("k", -1), ("w", a[1], a[2]), ("k", -1)])
        elif a[0] == "w":
            out.append(("w", a[1], a[2]))
        else:
            out.append(a)
    return coeff, out
