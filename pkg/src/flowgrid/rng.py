"""Counter-based random streams.

Every stochastic routine in the package draws from a Philox stream addressed
by ``(master_seed, *path)``: the path names the role of the stream (e.g.
initialization noise vs. step noise) and, for per-step noise, the step index.
Streams with different addresses are statistically independent, and a given
address always yields the same values — so samplers are bitwise reproducible
no matter how work is scheduled, and two samplers that address the same
stream consume *identical* noise (used by the coupled-chain tests).

Within a step, a single ``(n, d)`` block is drawn and row ``j`` belongs to
trajectory ``j``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "child_seed", "INIT_NOISE", "STEP_NOISE"]

INIT_NOISE = 0
"""Stream role for the draw that initializes a batch of trajectories."""

STEP_NOISE = 1
"""Stream role for the per-step innovation noise; path is (STEP_NOISE, i)."""


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator at address ``(seed, *path)``.

    Path elements must be non-negative integers below 2**32 (they become the
    SeedSequence spawn key).
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *path: int) -> int:
    """Derive an independent integer seed at address ``(seed, *path)``.

    Used when one component hands a whole sub-task (with its own internal
    streams) to another, e.g. the experiment harness seeding a sampler run.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])
