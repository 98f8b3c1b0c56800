"""Truncated Fock-space operators, displacement pulses and thermal states.

Everything is dense: the registers used here stay small (a few thousand
dimensions at most) and the propagator exponentials dominate the cost anyway.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm


@dataclass(frozen=True)
class FockRegister:
    """Ordered collection of truncated bosonic modes."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have equal length")
        if any(d < 2 for d in self.dims):
            raise ValueError("every mode needs dimension >= 2")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("mode labels must be unique")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def slot(self, label: str) -> int:
        return self.labels.index(label)


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator with the standard sqrt(n) matrix elements."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def mode_operators(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, a_dagger, n) on a single truncated mode."""
    a = destroy(dim)
    return a, a.conj().T, a.conj().T @ a


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """D(alpha) = expm(alpha a+ - alpha* a) on the truncated mode.

    Truncation makes this only approximately unitary; it is accurate while the
    displaced state stays well inside the register, so a warning is raised
    when 3 |alpha|^2 exceeds the dimension.
    """
    if 3.0 * abs(alpha) ** 2 > dim:
        warnings.warn(
            f"displacement alpha={alpha} is large for dim={dim}; "
            "truncation error may be significant",
            stacklevel=2,
        )
    a = destroy(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def thermal_state(nbar: float, dim: int) -> tuple[np.ndarray, float]:
    """Truncated thermal state and the probability captured by the truncation.

    The geometric distribution p_n ~ (nbar/(1+nbar))^n is renormalized on the
    first ``dim`` levels; the returned captured probability is the weight the
    untruncated state puts on those levels.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho, 1.0
    ratio = nbar / (1.0 + nbar)
    weights = ratio ** np.arange(dim) / (1.0 + nbar)
    captured = float(weights.sum())  # = 1 - ratio**dim
    return np.diag(weights / captured).astype(complex), captured


def embed(op: np.ndarray, slot: int, register: FockRegister) -> np.ndarray:
    """Tensor the single-mode operator with identities on the other slots."""
    if not 0 <= slot < register.n_modes:
        raise IndexError(f"slot {slot} out of range for {register.n_modes} modes")
    if op.shape != (register.dims[slot], register.dims[slot]):
        raise ValueError(
            f"operator shape {op.shape} does not match dim {register.dims[slot]}"
        )
    factors = [
        op if s == slot else np.eye(d, dtype=complex)
        for s, d in enumerate(register.dims)
    ]
    return reduce(np.kron, factors)


def product_state(states: list[np.ndarray]) -> np.ndarray:
    """Tensor product of per-mode density matrices, in register order."""
    return reduce(np.kron, states)


def number_expectation(rho: np.ndarray, slot: int, register: FockRegister) -> float:
    n_op = embed(np.diag(np.arange(register.dims[slot])).astype(complex), slot, register)
    return float(np.real(np.trace(n_op @ rho)))
