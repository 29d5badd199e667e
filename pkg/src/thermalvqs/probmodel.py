"""Product Bernoulli distribution over bitstrings, parameterized by logits.

The distribution factorizes as ``p(x) = prod_i phi_i**x_i (1-phi_i)**(1-x_i)``
with ``phi_i = sigmoid(logit_i)``, so log-probabilities, score vectors and the
entropy all come in closed form. Logits are clamped to ``|s| <= 30`` before
every use; beyond that the probabilities are saturated to double precision
anyway and the clamp keeps gradients finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .qsim import bit_table, index_to_bits

LOGIT_CLAMP = 30.0
ENUMERATION_CAP = 14


def _as_bits(x, n: int) -> np.ndarray:
    """Accept a bitstring or 0/1 array and return a float vector of length n."""
    if isinstance(x, str):
        if len(x) != n or set(x) - {"0", "1"}:
            raise ValueError(f"need {n} characters of 0/1, got {x!r}")
        return np.fromiter((c == "1" for c in x), dtype=np.float64, count=n)
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (n,):
        raise ValueError(f"need {n} bits, got shape {arr.shape}")
    return arr


@dataclass
class BernoulliProduct:
    """Independent per-qubit Bernoulli factors over length-n bitstrings."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.atleast_1d(np.asarray(self.logits, dtype=np.float64))
        if self.logits.ndim != 1 or self.logits.size < 1:
            raise ValueError("logits must be a non-empty vector")

    @classmethod
    def uniform(cls, n: int) -> "BernoulliProduct":
        """Zero logits: every bitstring equally likely."""
        return cls(np.zeros(n))

    @property
    def n(self) -> int:
        return self.logits.size

    def _clamped(self) -> np.ndarray:
        return np.clip(self.logits, -LOGIT_CLAMP, LOGIT_CLAMP)

    def probs(self) -> np.ndarray:
        """Per-qubit probability of bit 1."""
        s = self._clamped()
        return 1.0 / (1.0 + np.exp(-s))

    def _log_sig(self) -> tuple[np.ndarray, np.ndarray]:
        # (log phi, log (1 - phi)), both computed without cancellation
        s = self._clamped()
        return -np.logaddexp(0.0, -s), -np.logaddexp(0.0, s)

    def log_prob(self, x) -> float:
        bits = _as_bits(x, self.n)
        lp1, lp0 = self._log_sig()
        return float(bits @ lp1 + (1.0 - bits) @ lp0)

    def grad_log_prob(self, x) -> np.ndarray:
        """Score vector with respect to the raw logits: x - phi."""
        return _as_bits(x, self.n) - self.probs()

    def entropy(self) -> float:
        """Shannon entropy in nats, summed over independent bits."""
        lp1, lp0 = self._log_sig()
        phi = self.probs()
        return float(-(phi @ lp1 + (1.0 - phi) @ lp0))

    def sample(self, n_samples: int, rng: np.random.Generator) -> list[str]:
        if n_samples < 1:
            raise ValueError("n_samples must be positive")
        draws = rng.random((n_samples, self.n)) < self.probs()
        return ["".join("1" if b else "0" for b in row) for row in draws]

    def log_probs_all(self) -> np.ndarray:
        """Log-probability of every bitstring, indexed by basis index."""
        if self.n > ENUMERATION_CAP:
            raise CapacityError(
                f"enumeration capped at {ENUMERATION_CAP} bits, got {self.n}"
            )
        bits = bit_table(self.n)
        lp1, lp0 = self._log_sig()
        return bits @ lp1 + (1.0 - bits) @ lp0

    def enumerate_support(self) -> list[tuple[str, float]]:
        """All ``(bitstring, probability)`` pairs in basis-index order."""
        p = np.exp(self.log_probs_all())
        return [(index_to_bits(m, self.n), float(p[m])) for m in range(p.size)]
