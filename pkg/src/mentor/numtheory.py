"""Exact integer routines for modular arithmetic questions.

Results are computed here before any text generation happens, so the numbers
shown to students never depend on model output.
"""
from __future__ import annotations

from .errors import MentorError


class DegenerateInput(MentorError):
    """Inputs outside the domain where the operation is defined."""


class NotInvertible(MentorError):
    def __init__(self, a: int, modulus: int, gcd: int):
        super().__init__(f"{a} is not invertible mod {modulus}: gcd({a}, {modulus}) = {gcd}")
        self.a = a
        self.modulus = modulus
        self.gcd = gcd


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y = g = gcd(a, b) > 0."""
    if a == 0 and b == 0:
        raise DegenerateInput("gcd(0, 0) is undefined")
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def mod_inverse(a: int, modulus: int) -> int:
    """Multiplicative inverse of a modulo `modulus`, normalized into [1, modulus-1]."""
    if modulus < 2:
        raise DegenerateInput(f"modulus must be at least 2, got {modulus}")
    a_norm = a % modulus
    if a_norm == 0:
        raise NotInvertible(a, modulus, modulus)
    g, x, _ = egcd(a_norm, modulus)
    if g != 1:
        raise NotInvertible(a, modulus, g)
    return x % modulus


def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """Binary exponentiation; never materializes base**exponent."""
    if exponent < 0:
        raise DegenerateInput(f"exponent must be non-negative, got {exponent}")
    if modulus < 1:
        raise DegenerateInput(f"modulus must be positive, got {modulus}")
    result = 1 % modulus
    base %= modulus
    while exponent:
        if exponent & 1:
            result = result * base % modulus
        base = base * base % modulus
        exponent >>= 1
    return result
