"""Exterior algebra on an inner-product space of dimension <= 7.

Forms are sparse maps from strictly increasing 1-based index tuples to
float coefficients.  All sign bookkeeping goes through inversion counting,
so the only conventions living here are:

  * wedge merges index tuples with the permutation sign,
  * the interior product is the antiderivation with i_{e_k} e^{k...} = +e^{...},
  * the Hodge star satisfies  b ^ *a = <a,b>_g vol  with
    vol = sqrt(det g) * orientation * e^{1...n}.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .exprs import eval_scalar

#: Global zero tolerance for coefficient comparisons.
EPS = 1e-9


def sort_indices(indices: Iterable[int]) -> tuple[tuple[int, ...], int] | None:
    """Sort an index sequence, returning (sorted tuple, sign); None if repeated."""
    idx = list(indices)
    sign = 1
    # insertion sort, counting swaps
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return None
    return tuple(idx), sign


def merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[tuple[int, ...], int] | None:
    """Merge two sorted disjoint tuples; None when they overlap."""
    merged = []
    sign = 1
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] == right[j]:
            return None
        if left[i] < right[j]:
            merged.append(left[i])
            i += 1
        else:
            # right[j] jumps over the remaining len(left) - i entries
            if (len(left) - i) % 2:
                sign = -sign
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return tuple(merged), sign


class Form:
    """A grade-p alternating form, stored sparsely."""

    __slots__ = ("dim", "grade", "terms")

    def __init__(self, dim: int, grade: int, terms: Mapping[tuple[int, ...], float] | None = None):
        if not 0 <= grade <= dim:
            raise ValueError(f"grade {grade} out of range for dim {dim}")
        self.dim = dim
        self.grade = grade
        clean: dict[tuple[int, ...], float] = {}
        if terms:
            for key, value in terms.items():
                srt = sort_indices(key)
                if srt is None:
                    continue
                tup, sign = srt
                if len(tup) != grade:
                    raise ValueError(f"index tuple {key} has wrong length for grade {grade}")
                if tup and not (1 <= tup[0] and tup[-1] <= dim):
                    raise ValueError(f"index tuple {key} out of range 1..{dim}")
                c = clean.get(tup, 0.0) + sign * float(value)
                if c == 0.0:
                    clean.pop(tup, None)
                else:
                    clean[tup] = c
        self.terms = {k: v for k, v in clean.items() if abs(v) > EPS}

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, dim: int, grade: int) -> "Form":
        return cls(dim, grade)

    @classmethod
    def basis(cls, dim: int, *indices: int) -> "Form":
        return cls(dim, len(indices), {tuple(indices): 1.0})

    # -- basic queries -------------------------------------------------
    def coeff(self, *indices: int) -> float:
        srt = sort_indices(indices)
        if srt is None:
            return 0.0
        tup, sign = srt
        return sign * self.terms.get(tup, 0.0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def norm_inf(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def allclose(self, other: "Form", tol: float = EPS) -> bool:
        if self.dim != other.dim or self.grade != other.grade:
            return False
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys)

    # -- linear structure ----------------------------------------------
    def _check_compatible(self, other: "Form") -> None:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.grade != other.grade:
            raise ValueError("grade mismatch")

    def __add__(self, other: "Form") -> "Form":
        self._check_compatible(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return Form(self.dim, self.grade, terms)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-1.0) * other

    def __neg__(self) -> "Form":
        return (-1.0) * self

    def __mul__(self, scalar: float) -> "Form":
        return Form(self.dim, self.grade, {k: scalar * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Form({self.dim}, {self.grade}, {format_form(self)!r})"


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; returns the zero form when grades overflow."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    grade = a.grade + b.grade
    if grade > a.dim:
        return Form(a.dim, a.dim, {})
    terms: dict[tuple[int, ...], float] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            merged = merge_sign(ka, kb)
            if merged is None:
                continue
            key, sign = merged
            terms[key] = terms.get(key, 0.0) + sign * va * vb
    return Form(a.dim, grade, terms)


def wedge_all(forms: Iterable[Form]) -> Form:
    it = iter(forms)
    out = next(it)
    for f in it:
        out = wedge(out, f)
    return out


def contract(x: np.ndarray, a: Form) -> Form:
    """Interior product i_x a; an antiderivation of degree -1."""
    if a.grade == 0:
        raise ValueError("cannot contract a grade-0 form")
    x = np.asarray(x, dtype=float)
    if x.shape != (a.dim,):
        raise ValueError("dimension mismatch")
    terms: dict[tuple[int, ...], float] = {}
    for key, value in a.terms.items():
        for pos, idx in enumerate(key):
            xi = x[idx - 1]
            if xi == 0.0:
                continue
            rest = key[:pos] + key[pos + 1:]
            sign = -1.0 if pos % 2 else 1.0
            terms[rest] = terms.get(rest, 0.0) + sign * xi * value
    return Form(a.dim, a.grade - 1, terms)


def _check_metric(g: np.ndarray, dim: int) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (dim, dim):
        raise ValueError("metric has wrong shape")
    if not np.allclose(g, g.T, atol=1e-12):
        raise ValueError("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise ValueError("metric is not positive-definite") from None
    return g


def hodge(a: Form, g: np.ndarray | None = None, orientation: int = 1) -> Form:
    """Hodge star of `a` for metric `g` (default identity) and orientation +-1.

    Defined by b ^ *a = <a,b>_g vol with vol = sqrt(det g) * orientation * e^{1..n}.
    """
    n = a.dim
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    full = tuple(range(1, n + 1))
    identity = g is None
    if not identity:
        g = _check_metric(g, n)
        ginv = np.linalg.inv(g)
        scale = math.sqrt(np.linalg.det(g)) * orientation
    else:
        scale = float(orientation)

    terms: dict[tuple[int, ...], float] = {}
    if identity:
        for key, value in a.terms.items():
            comp = tuple(i for i in full if i not in key)
            _, sign = merge_sign(key, comp)
            terms[comp] = sign * value * scale
        return Form(n, n - a.grade, terms)

    from .dense import basis_tuples

    for key in basis_tuples(n, a.grade):
        acc = 0.0
        for j_key, value in a.terms.items():
            minor = ginv[np.ix_([i - 1 for i in key], [j - 1 for j in j_key])]
            acc += np.linalg.det(minor) * value
        if abs(acc) <= EPS:
            continue
        comp = tuple(i for i in full if i not in key)
        _, sign = merge_sign(key, comp)
        terms[comp] = terms.get(comp, 0.0) + sign * scale * acc
    return Form(n, n - a.grade, terms)


def musical_flat(x: np.ndarray, g: np.ndarray | None = None) -> Form:
    """Lower the index of a vector: flat(e_i) = e^i under the identity metric."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    cov = x if g is None else _check_metric(g, n) @ x
    return Form(n, 1, {(i + 1,): cov[i] for i in range(n)})


def musical_sharp(a: Form, g: np.ndarray | None = None) -> np.ndarray:
    """Raise the index of a 1-form; inverse of musical_flat."""
    if a.grade != 1:
        raise ValueError("sharp expects a 1-form")
    cov = np.zeros(a.dim)
    for (i,), v in a.terms.items():
        cov[i - 1] = v
    if g is None:
        return cov
    return np.linalg.solve(_check_metric(g, a.dim), cov)


# -- text syntax ------------------------------------------------------------
#
# Form literals look like ``-2*e{1,2,7} + sqrt(3)/2*e{5,6,7}``; scalars admit
# decimals, rationals and sqrt(integer) expressions.


def _split_terms(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip():
            out.append(cur)
            cur = ch
        else:
            cur += ch
    if cur.strip():
        out.append(cur)
    return out


class FormSyntaxError(ValueError):
    pass


def parse_form(text: str, dim: int) -> Form:
    """Parse a form literal; the grade is inferred from the index tuples."""
    terms: dict[tuple[int, ...], float] = {}
    grade = None
    chunks = _split_terms(text.strip())
    if not chunks:
        raise FormSyntaxError("empty form literal")
    for chunk in chunks:
        chunk = chunk.strip()
        if "e{" not in chunk:
            raise FormSyntaxError(f"term {chunk!r} has no basis factor e{{...}}")
        coef_text, _, idx_text = chunk.partition("e{")
        idx_text = idx_text.strip()
        if not idx_text.endswith("}"):
            raise FormSyntaxError(f"unterminated index tuple in {chunk!r}")
        try:
            indices = tuple(int(t) for t in idx_text[:-1].split(","))
        except ValueError:
            raise FormSyntaxError(f"bad index tuple in {chunk!r}") from None
        coef_text = coef_text.strip().rstrip("*").strip()
        if coef_text in ("", "+"):
            coef = 1.0
        elif coef_text == "-":
            coef = -1.0
        else:
            try:
                coef = eval_scalar(coef_text)
            except Exception:
                raise FormSyntaxError(f"bad coefficient {coef_text!r}") from None
        if grade is None:
            grade = len(indices)
        elif len(indices) != grade:
            raise FormSyntaxError("mixed grades in form literal")
        if any(not 1 <= i <= dim for i in indices):
            raise FormSyntaxError(f"index out of range 1..{dim} in {chunk!r}")
        srt = sort_indices(indices)
        if srt is None:
            continue
        tup, sign = srt
        terms[tup] = terms.get(tup, 0.0) + sign * coef
    return Form(dim, grade if grade is not None else 0, terms)


def format_form(a: Form, digits: int = 12) -> str:
    if not a.terms:
        return "0"
    parts = []
    for key in sorted(a.terms):
        v = a.terms[key]
        body = "e{" + ",".join(str(i) for i in key) + "}"
        mag = abs(v)
        coef = "" if abs(mag - 1.0) <= 1e-14 else f"{mag:.{digits}g}*"
        parts.append(("-" if v < 0 else "+") + f"{coef}{body}")
    text = " ".join(parts)
    return text[1:] if text.startswith("+") else text
