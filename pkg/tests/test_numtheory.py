"""Modular arithmetic engine tests.

Expected values come from independent oracles written here (brute-force
inverse scan, iterative multiply-and-reduce power) rather than from the
implementation under test.
"""
from __future__ import annotations

import math
import random
import time

import pytest
from hypothesis import given, strategies as st

from mentor.numtheory import DegenerateInput, NotInvertible, egcd, mod_inverse, mod_pow


def brute_inverse(a: int, m: int) -> int | None:
    a %= m
    for x in range(1, m):
        if (a * x) % m == 1:
            return x
    return None


def slow_pow(base: int, exp: int, mod: int) -> int:
    # One multiply-and-reduce per exponent unit; deliberately naive.
    acc = 1 % mod
    for _ in range(exp):
        acc = (acc * base) % mod
    return acc


def test_egcd_classic_pair():
    g, x, y = egcd(240, 46)
    assert (g, x, y) == (2, -9, 47)
    assert 240 * x + 46 * y == g


def test_egcd_bezout_randomized():
    rng = random.Random(7)
    for _ in range(300):
        a = rng.randint(-10**9, 10**9)
        b = rng.randint(-10**9, 10**9)
        if a == 0 and b == 0:
            continue
        g, x, y = egcd(a, b)
        assert g == math.gcd(a, b)
        assert g > 0
        assert a * x + b * y == g


@given(st.integers(-10**12, 10**12), st.integers(-10**12, 10**12))
def test_egcd_bezout_property(a, b):
    if a == 0 and b == 0:
        with pytest.raises(DegenerateInput):
            egcd(a, b)
        return
    g, x, y = egcd(a, b)
    assert g == math.gcd(a, b) and a * x + b * y == g


def test_egcd_zero_sides():
    assert egcd(0, 5)[0] == 5
    assert egcd(5, 0)[0] == 5
    with pytest.raises(DegenerateInput):
        egcd(0, 0)


def test_mod_inverse_reference_query():
    # Oracle first: brute scan agrees, and the value is 138.
    assert brute_inverse(213, 323) == 138
    assert mod_inverse(213, 323) == 138


def test_mod_inverse_matches_brute_force_small_moduli():
    rng = random.Random(11)
    for _ in range(200):
        m = rng.randint(2, 400)
        a = rng.randint(-800, 800)
        expected = brute_inverse(a, m)
        if expected is None:
            with pytest.raises(NotInvertible):
                mod_inverse(a, m)
        else:
            assert mod_inverse(a, m) == expected


def test_mod_inverse_normalizes_negative_input():
    # -110 = 213 (mod 323)
    assert mod_inverse(-110, 323) == 138
    assert mod_inverse(213 + 323, 323) == 138


def test_mod_inverse_not_invertible_reports_gcd():
    with pytest.raises(NotInvertible) as err:
        mod_inverse(4, 8)
    assert err.value.gcd == 4


def test_mod_inverse_rejects_tiny_modulus():
    with pytest.raises(DegenerateInput):
        mod_inverse(3, 1)
    with pytest.raises(DegenerateInput):
        mod_inverse(3, 0)


def test_mod_pow_examples_against_oracle():
    cases = [(2, 10, 1000), (5, 0, 7), (7, 560, 561)]
    expected = [24, 1, 1]
    for (b, e, m), want in zip(cases, expected):
        assert slow_pow(b, e, m) == want
        assert mod_pow(b, e, m) == want


def test_mod_pow_randomized_vs_oracle():
    rng = random.Random(13)
    for _ in range(300):
        b = rng.randint(-1000, 1000)
        e = rng.randint(0, 5000)
        m = rng.randint(1, 10**6)
        assert mod_pow(b, e, m) == slow_pow(b, e, m)


def test_mod_pow_rejects_bad_domain():
    with pytest.raises(DegenerateInput):
        mod_pow(2, -1, 7)
    with pytest.raises(DegenerateInput):
        mod_pow(2, 3, 0)


def test_mod_pow_large_exponent_is_fast():
    start = time.perf_counter()
    assert mod_pow(7, 10**18 + 9, 10**9 + 7) == pow(7, 10**18 + 9, 10**9 + 7)
    assert time.perf_counter() - start < 0.5
