"""Per-stage seeds derived from one master seed with a splitmix64 stream."""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
STAGES = ("plan_T", "f_S")


def splitmix64(state: int) -> tuple[int, int]:
    """One step: returns (next_state, output)."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def stage_seeds(master: int, stages=STAGES) -> dict[str, int]:
    """The i-th splitmix64 output after ``master`` seeds the i-th stage."""
    state = int(master) & MASK64
    out = {}
    for name in stages:
        state, out[name] = splitmix64(state)
    return out


def seed_record(master: int, stages=STAGES) -> dict:
    return {"derivation": "splitmix64", "master": int(master), "stages": stage_seeds(master, stages)}
