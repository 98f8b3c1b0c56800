"""Time evolution under time-independent Hamiltonians with optional
Lindblad dissipation.

Propagators for a fixed step are built once (matrix exponential, tolerance set
by scipy's scaling-and-squaring Pade implementation) and then reused across a
whole scan; hbar = 1 and all generators are in rad/s.  Three execution paths:
a phase-multiplication fast path for diagonal Hamiltonians, a dense unitary
for general dissipation-free models, and a dense superoperator exponential
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .fock import FockRegister, destroy, embed

DEFAULT_MEMORY_BUDGET = 6 * 1024**3  # bytes, guards the superoperator build
TRACE_TOL_PER_STEP = 1e-9


class PropagatorSizeError(MemoryError):
    """Superoperator would exceed the configured memory budget."""


class PropagatorAccuracyError(RuntimeError):
    """Trace drift per step exceeded tolerance."""


@dataclass
class LindbladModel:
    """Hamiltonian (rad/s) plus collapse operators with rates (1/s)."""

    hamiltonian: np.ndarray
    collapse_ops: list[tuple[np.ndarray, float]] = field(default_factory=list)
    register: FockRegister | None = None

    def __post_init__(self):
        h = np.asarray(self.hamiltonian)
        herm = np.max(np.abs(h - h.conj().T))
        if herm > 1e-10 * max(1.0, np.max(np.abs(h))):
            raise ValueError(f"Hamiltonian not Hermitian (residual {herm:.2e})")
        for _, rate in self.collapse_ops:
            if rate < 0:
                raise ValueError("collapse rates must be >= 0")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def dissipative(self) -> bool:
        return any(rate > 0 for _, rate in self.collapse_ops)


@dataclass(frozen=True)
class Propagator:
    """exp(L dt) in one of three representations.

    kind 'diagonal' stores the Hamiltonian eigenphases (valid only for
    diagonal H without dissipation), 'unitary' stores exp(-iH dt), and
    'super' stores the full superoperator on row-major-vectorized density
    matrices.
    """

    kind: str
    step: float
    dim: int
    matrix: np.ndarray | None = None
    phases: np.ndarray | None = None  # exp(-i E dt) for the diagonal path

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self.apply_batch(rho[None, :, :])[0]

    def apply_batch(self, states: np.ndarray) -> np.ndarray:
        """Propagate a (batch, dim, dim) stack of density matrices."""
        if self.kind == "diagonal":
            return states * (self.phases[:, None] * self.phases.conj()[None, :])
        if self.kind == "unitary":
            return self.matrix @ states @ self.matrix.conj().T
        b, d, _ = states.shape
        out = self.matrix @ states.reshape(b, d * d).T
        return np.ascontiguousarray(out.T).reshape(b, d, d)


def _is_diagonal(h: np.ndarray) -> bool:
    off = h - np.diag(np.diag(h))
    return np.max(np.abs(off)) <= 1e-12 * max(1.0, np.max(np.abs(h)))


def liouvillian(model: LindbladModel) -> np.ndarray:
    """Dense superoperator -i[H, .] + dissipators, row-major vectorization."""
    h = model.hamiltonian
    d = model.dim
    eye = np.eye(d, dtype=complex)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in model.collapse_ops:
        if rate == 0:
            continue
        cdc = op.conj().T @ op
        lv += rate * (
            np.kron(op, op.conj())
            - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
        )
    return lv


def build_propagator(
    model: LindbladModel,
    dt: float,
    prefer: str = "auto",
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> Propagator:
    """exp(L dt) with the cheapest representation that is exact for the model.

    ``prefer='dense'`` forces the unitary/superoperator path even when the
    diagonal fast path applies (used to cross-check the two).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = model.dim
    if not model.dissipative:
        if prefer != "dense" and _is_diagonal(model.hamiltonian):
            energies = np.real(np.diag(model.hamiltonian))
            return Propagator(
                kind="diagonal", step=dt, dim=d, phases=np.exp(-1j * energies * dt)
            )
        return Propagator(
            kind="unitary", step=dt, dim=d, matrix=expm(-1j * model.hamiltonian * dt)
        )
    superdim = d * d
    need = superdim * superdim * 16
    if need > memory_budget:
        raise PropagatorSizeError(
            f"superoperator needs {need / 1024**3:.1f} GiB "
            f"(dim {d} -> {superdim}^2), budget {memory_budget / 1024**3:.1f} GiB"
        )
    return Propagator(
        kind="super", step=dt, dim=d, matrix=expm(liouvillian(model) * dt)
    )


def heating_dissipator(
    slot: int, rate_ndot: float, register: FockRegister
) -> list[tuple[np.ndarray, float]]:
    """Infinite-temperature heating: sqrt(ndot) a and sqrt(ndot) a+.

    Both jump directions at the same rate give d<n>/dt = ndot independent of
    the occupation, i.e. the mean phonon number grows linearly.
    """
    if rate_ndot < 0:
        raise ValueError("heating rate must be >= 0")
    if rate_ndot == 0:
        return []
    a = embed(destroy(register.dims[slot]), slot, register)
    return [(a, rate_ndot), (a.conj().T, rate_ndot)]


def evolve(state: np.ndarray, prop: Propagator, steps: int) -> np.ndarray:
    """Apply the propagator ``steps`` times with numerical hygiene.

    The state is re-hermitized after every application and the trace drift is
    checked against TRACE_TOL_PER_STEP.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rho = state
    for _ in range(steps):
        trace_before = np.real(np.trace(rho))
        rho = prop.apply(rho)
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.real(np.trace(rho)) - trace_before)
        if drift > TRACE_TOL_PER_STEP * max(1.0, abs(trace_before)):
            raise PropagatorAccuracyError(
                f"trace drift {drift:.2e} in one step of {prop.kind} propagator"
            )
    return rho
