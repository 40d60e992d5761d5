"""Seed handling: 64-bit mixing and counter-based streams.

Every replica gets its own Philox stream keyed by ``mix_seed(master, replica)``.
Draws inside a stream happen in a fixed order, so a (master, replica) pair
always produces the same numbers no matter how replicas are scheduled.
"""
from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB

SEED_ENV_VAR = "PARAFRAC_SEED"


def splitmix64(x: int) -> int:
    z = (x + SPLITMIX_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & MASK64
    return z ^ (z >> 31)


def mix_seed(master: int, index: int) -> int:
    """Derive the seed of substream ``index`` from a 64-bit master seed."""
    return splitmix64((master & MASK64) ^ splitmix64(index & MASK64))


def parse_seed(text: str | int) -> int:
    """Parse a 64-bit unsigned seed given in decimal or 0x-hex."""
    if isinstance(text, int):
        value = text
    else:
        s = text.strip().lower()
        value = int(s, 16) if s.startswith("0x") else int(s, 10)
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


def resolve_seed(flag: str | int | None, default: int = 0) -> int:
    """Master seed: PARAFRAC_SEED overrides ``--seed``, which overrides ``default``."""
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        return parse_seed(env)
    if flag is not None:
        return parse_seed(flag)
    return parse_seed(default)


def make_rng(seed: int, index: int | None = None) -> np.random.Generator:
    """Philox generator for ``seed`` (mixed with ``index`` when given)."""
    key = seed if index is None else mix_seed(seed, index)
    return np.random.Generator(np.random.Philox(key=key & MASK64))
