from __future__ import annotations

import pytest

from umtc.mtc import builtin_category


@pytest.fixture(scope="session")
def fib():
    return builtin_category("fibonacci")


@pytest.fixture(scope="session")
def ising():
    return builtin_category("ising")


@pytest.fixture(scope="session")
def z3():
    return builtin_category("pointed-z3")


@pytest.fixture(scope="session")
def z5():
    return builtin_category("pointed-z5")


@pytest.fixture(scope="session")
def z9():
    return builtin_category("pointed-z9")


@pytest.fixture(scope="session")
def su2_4():
    return builtin_category("su2-4")
