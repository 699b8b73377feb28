"""Deterministic, addressable random streams for reproducible replications.

Every stochastic decision in a run draws from a stream addressed by
(scenario, replication, agent, semester, purpose).  Streams are independent
Philox counter blocks: the address is written into the counter words, so the
same address yields the same draws no matter in which order streams are
visited or how replications are scheduled across processes.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

__all__ = ["Purpose", "StreamKit", "stream_at", "derive_seed"]

_MASK64 = (1 << 64) - 1


class Purpose(IntEnum):
    """Purpose tag of a random stream (last address component)."""

    ARCHETYPE = 1      # cohort-level archetype label assignment
    INIT_PSYCH = 2     # per-agent initial stress/belonging
    ATTEMPTS = 3       # course attempt outcomes within a semester
    DEBT = 4           # finals-debt resolution draws
    DROPOUT = 5        # per-semester dropout Bernoulli
    CALIBRATION = 6    # candidate sampling during random refinement


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _key_words(seed: int) -> tuple[int, int]:
    # Expand an arbitrary non-negative integer seed into the 128-bit Philox key.
    lo = _splitmix64(seed & _MASK64)
    hi = _splitmix64(((seed >> 64) ^ lo) & _MASK64)
    return lo, hi


def derive_seed(master_seed: int, *fields: int) -> int:
    """Derive a 64-bit sub-seed from a master seed and address fields.

    Used to hand self-contained integer seeds to operations with a plain
    ``seed`` argument (cohort sampling, curriculum synthesis) while keeping
    everything a pure function of the master seed.
    """
    state = _splitmix64(master_seed & _MASK64) ^ ((master_seed >> 64) & _MASK64)
    for f in fields:
        state = _splitmix64(state ^ (f & _MASK64))
    return state


class StreamKit:
    """Factory of addressed streams sharing one Philox bit generator.

    ``stream()`` re-seats the counter at the requested address and returns the
    shared ``numpy.random.Generator``.  The returned generator is only valid
    until the next ``stream()`` call on the same kit; the engine consumes
    streams strictly sequentially, which is what makes the shared buffer safe.
    """

    def __init__(self, seed: int, scenario_code: int = 0, replication: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        self.scenario_code = scenario_code
        self.replication = replication
        key = _key_words(seed)
        self._bitgen = np.random.Philox(key=(key[0] | (key[1] << 64)))
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._counter = self._state["state"]["counter"]
        self._word3 = ((scenario_code & 0xFFFFFFFF) << 32) | (replication & 0xFFFFFFFF)

    def stream(self, agent_id: int, semester: int, purpose: Purpose) -> np.random.Generator:
        """Seat the generator at (agent, semester, purpose) and return it."""
        self._counter[0] = 0
        self._counter[1] = (agent_id + 1) & _MASK64   # 0 reserved for cohort level
        self._counter[2] = ((semester & 0xFFFFFF) << 8) | int(purpose)
        self._counter[3] = self._word3
        self._state["buffer_pos"] = 4               # discard buffered blocks
        self._state["has_uint32"] = 0
        self._state["uinteger"] = 0
        self._bitgen.state = self._state
        return self._gen

    def cohort_stream(self, purpose: Purpose) -> np.random.Generator:
        """Stream for cohort-level draws not tied to a single agent."""
        return self.stream(-1, 0, purpose)


def stream_at(
    seed: int,
    agent_id: int,
    semester: int,
    purpose: Purpose,
    scenario_code: int = 0,
    replication: int = 0,
) -> np.random.Generator:
    """Independent generator seated at one address (for tests and one-offs)."""
    return StreamKit(seed, scenario_code, replication).stream(agent_id, semester, purpose)
