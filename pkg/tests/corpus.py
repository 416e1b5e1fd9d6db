"""Shared, cached Q-systems for the test modules."""

from __future__ import annotations

from functools import lru_cache

from umtc.mtc import builtin_category
from umtc.qsystem import builtin_qsystem, full_center, invariant_matrix

# (category, builtin Q-system) pairs; all irreducible
CORPUS = [
    ("fibonacci", "trivial"),
    ("ising", "trivial"),
    ("pointed-z3", "trivial"),
    ("su2-4", "trivial"),
    ("pointed-z3", "perm-C"),
    ("pointed-z5", "perm-C"),
    ("pointed-z9", "isotropic-3"),
    ("su2-4", "isotropic-4"),
]

LR_CORPUS = ["fibonacci", "ising", "pointed-z3", "su2-2"]


@lru_cache(maxsize=None)
def qsys(cat: str, spec: str):
    return builtin_qsystem(builtin_category(cat), spec)


@lru_cache(maxsize=None)
def center(cat: str, spec: str):
    return full_center(qsys(cat, spec))


@lru_cache(maxsize=None)
def invariant(cat: str, spec: str):
    return invariant_matrix(qsys(cat, spec))
