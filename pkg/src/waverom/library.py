"""Candidate wave-speed function libraries.

A library is an ordered list of named scalar functions of time. The fitting
stage regresses unwrapped wave positions onto the library's values, so term
order is part of the contract (coefficients line up with terms).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["FunctionTerm", "FunctionLibrary", "build_library"]


@dataclass(frozen=True)
class FunctionTerm:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    params: tuple[float, ...] = ()


class FunctionLibrary:
    """Ordered collection of candidate time functions with unique names."""

    def __init__(self, terms):
        terms = list(terms)
        names = [term.name for term in terms]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate term names in library: {names}")
        if not terms:
            raise ValueError("library must contain at least one term")
        self.terms = terms

    @property
    def names(self) -> list[str]:
        return [term.name for term in self.terms]

    def __len__(self) -> int:
        return len(self.terms)

    def evaluate(self, t) -> np.ndarray:
        """Evaluate all terms at times ``t``; returns (len(t), n_terms)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        columns = [np.broadcast_to(term.func(t), t.shape).astype(float) for term in self.terms]
        matrix = np.column_stack(columns)
        if not np.all(np.isfinite(matrix)):
            bad = [self.terms[j].name for j in np.unique(np.nonzero(~np.isfinite(matrix))[1])]
            raise ValueError(f"library terms {bad} are non-finite on the requested times")
        return matrix


def _fmt(value: float) -> str:
    return f"{value:g}"


def build_library(kinds, poly_degree=2, sin_freqs=(), exp_rates=()) -> FunctionLibrary:
    """Assemble a function library from named families.

    Parameters
    ----------
    kinds : iterable of {"constant", "linear", "polynomial", "sin", "exp"}
        ``constant`` contributes 1; ``linear`` contributes 1 and t (the
        preprocessing library is exactly ``{"linear"}``); ``polynomial``
        contributes t^2 .. t^poly_degree; ``sin`` contributes a sin/cos pair
        per frequency; ``exp`` contributes an exponential per rate.
    poly_degree : int
        Highest power for "polynomial", >= 2.
    sin_freqs, exp_rates : sequence of float
        Parameter grids for the parametric families; must be non-empty when
        the corresponding kind is requested.
    """
    kinds = set(kinds)
    known = {"constant", "linear", "polynomial", "sin", "exp"}
    unknown = kinds - known
    if unknown:
        raise ValueError(f"unknown library kinds: {sorted(unknown)}")
    if not kinds:
        raise ValueError("kinds must be non-empty")

    terms: list[FunctionTerm] = []
    if "constant" in kinds or "linear" in kinds:
        terms.append(FunctionTerm("1", lambda t: np.ones_like(t)))
    if "linear" in kinds:
        terms.append(FunctionTerm("t", lambda t: t))
    if "polynomial" in kinds:
        if poly_degree < 2:
            raise ValueError("polynomial kind needs poly_degree >= 2")
        for p in range(2, int(poly_degree) + 1):
            terms.append(FunctionTerm(f"t^{p}", lambda t, p=p: t**p, params=(float(p),)))
    if "sin" in kinds:
        freqs = tuple(float(w) for w in sin_freqs)
        if not freqs:
            raise ValueError("sin kind needs a non-empty sin_freqs grid")
        for w in freqs:
            terms.append(FunctionTerm(f"sin({_fmt(w)} t)", lambda t, w=w: np.sin(w * t), (w,)))
            terms.append(FunctionTerm(f"cos({_fmt(w)} t)", lambda t, w=w: np.cos(w * t), (w,)))
    if "exp" in kinds:
        rates = tuple(float(r) for r in exp_rates)
        if not rates:
            raise ValueError("exp kind needs a non-empty exp_rates grid")
        for r in rates:
            terms.append(FunctionTerm(f"exp({_fmt(r)} t)", lambda t, r=r: np.exp(r * t), (r,)))
    return FunctionLibrary(terms)
