"""Cubic and quartic Coulomb couplings and the effective mode parameters.

Position-basis tensors C3/C4 are built from the dimensionless equilibrium
positions; contracting them with the normal-mode matrix gives the mode-basis
tensors D3/D4 from which every effective rate follows: the zigzag
self-interaction, cross-Kerr dephasing rates, frequency shifts (fourth order
directly, third order via second-order perturbation theory), and the resonant
zigzag-stretch exchange coupling.

Mode indexing is 0-based everywhere in code: the center-of-mass mode is index
0 and the zigzag/highest axial mode is index N-1.  Human-readable labels in
parameter tables use the conventional 1-based numbering ("x2" is the second
x mode, i.e. index 1), produced only by :func:`mode_label`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .crystal import EquilibriumChain, NormalModes, TrapConfig, length_scale

RESONANT_ANISOTROPY = 20.0 / 63.0  # 2*omega_zz = omega_stretch for N=3


class PerturbativeRegimeError(RuntimeError):
    """gamma_zz too small: the Kerr expansion in 1/gamma_zz is invalid."""


class NearResonanceError(RuntimeError):
    """A perturbation-theory denominator is near zero; use the resonant
    treatment (resonant_coupling / resonant_manifolds) instead."""


@dataclass(frozen=True)
class ModeTensors:
    """Mode-basis coupling tensors D3 (N^3) and D4 (N^4)."""

    d3: np.ndarray
    d4: np.ndarray


@dataclass(frozen=True)
class KerrParams:
    """One perturbative order's worth of effective Hamiltonian parameters.

    ``omega_si`` is the full self-interaction rate Omega_SI (the tables quote
    Omega_SI/2).  ``delta`` maps mode labels to frequency shifts and
    ``dephasing`` maps spectator-mode labels to the cross-Kerr rates
    Omega_d; all values in rad/s.
    """

    omega_si: float
    delta: dict[str, float]
    dephasing: dict[str, float]

    def combined(self, other: "KerrParams") -> "KerrParams":
        return KerrParams(
            omega_si=self.omega_si + other.omega_si,
            delta={k: self.delta[k] + other.delta[k] for k in self.delta},
            dephasing={
                k: self.dephasing[k] + other.dephasing[k]
                for k in self.dephasing
            },
        )


@dataclass(frozen=True)
class EffectiveParams:
    """Third-order, fourth-order and summed effective Kerr parameters."""

    third: KerrParams
    fourth: KerrParams
    effective: KerrParams

    @property
    def omega_si(self) -> float:
        return self.effective.omega_si

    @property
    def delta_omega_zz(self) -> float:
        return self.effective.delta["zz"]


@dataclass(frozen=True)
class ResonantCoupling:
    """Zigzag-stretch exchange rate and the residual resonance detuning."""

    omega_t: float
    detuning: float
    on_resonance: bool


@dataclass(frozen=True)
class RWATerm:
    term_id: str
    coefficient: float
    rotation_frequency: float
    ratio: float
    secular: bool


@dataclass(frozen=True)
class Manifold:
    """Conserved-charge block of the resonant Hamiltonian.

    ``states`` lists (n_str, n_zz) occupation pairs with n_zz + 2*n_str equal
    to ``charge``; ``eigenvalues`` are the block eigenvalues sorted ascending.
    """

    charge: int
    states: list[tuple[int, int]]
    eigenvalues: np.ndarray


def mode_label(direction: str, index0: int) -> str:
    """1-based table label for a 0-based mode index ('x', 1) -> 'x2'."""
    return f"{direction}{index0 + 1}"


def c3_tensor(chain: EquilibriumChain) -> np.ndarray:
    """Cubic Coulomb tensor over ion indices.

    Entries vanish whenever all three indices differ; the remaining cases are
    signed inverse fourth powers of the ion separations.
    """
    u = np.asarray(chain.u, dtype=float)
    n = len(u)
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    a = np.sign(d) / np.abs(d) ** 4
    s = a.sum(axis=1)
    c3 = np.zeros((n, n, n))
    for i in range(n):
        c3[i, i, i] = s[i]
        for k in range(n):
            if k == i:
                continue
            c3[i, i, k] = a[k, i]
            c3[i, k, k] = a[i, k]
            c3[i, k, i] = a[k, i]
    return c3


def c4_tensor(chain: EquilibriumChain) -> np.ndarray:
    """Quartic Coulomb tensor, fully symmetric in its four ion indices."""
    u = np.asarray(chain.u, dtype=float)
    n = len(u)
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    b = 1.0 / d**5
    t = b.sum(axis=1)
    c4 = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for m in range(n):
                    vals, counts = np.unique((i, j, k, m), return_counts=True)
                    if len(vals) == 1:
                        c4[i, j, k, m] = t[i]
                    elif len(vals) == 2 and counts[0] == 2:
                        c4[i, j, k, m] = b[vals[0], vals[1]]
                    elif len(vals) == 2:
                        # 3+1 split: minority index picks up the minus sign
                        c4[i, j, k, m] = -b[vals[0], vals[1]]
    return c4


def mode_tensors(c3: np.ndarray, c4: np.ndarray, m: np.ndarray) -> ModeTensors:
    """Contract position-basis tensors into the normal-mode basis.

    All entries with a center-of-mass index (mode 0) vanish because Coulomb
    forces cannot change the crystal's total momentum.
    """
    d3 = np.einsum("ijk,in,jm,kp->nmp", c3, m, m, m, optimize=True)
    d4 = np.einsum("ijkl,in,jm,kp,lq->nmpq", c4, m, m, m, m, optimize=True)
    return ModeTensors(d3=d3, d4=d4)


def tensors_for_chain(chain: EquilibriumChain, modes: NormalModes) -> ModeTensors:
    return mode_tensors(c3_tensor(chain), c4_tensor(chain), modes.M)


def ground_state_spread(trap: TrapConfig) -> float:
    """Axial COM zero-point spread z0 = sqrt(hbar / (2 m omega_z))."""
    return float(np.sqrt(constants.hbar / (2.0 * trap.mass * trap.omega_z)))


def anharmonic_prefactor(trap: TrapConfig) -> float:
    """The small expansion parameter z0 / (4 l_z), typically ~1e-3."""
    return ground_state_spread(trap) / (4.0 * length_scale(trap.mass, trap.omega_z))


def effective_kerr(
    trap: TrapConfig,
    modes: NormalModes,
    tensors: ModeTensors,
    gamma_min: float = 1e-5,
) -> KerrParams:
    """Fourth-order Kerr parameters of the x zigzag mode.

    Keeps the secular terms of the quartic Hamiltonian: the zigzag
    self-interaction (coefficient 36 kappa D4_zzzz / gamma_zz, with
    kappa = (z0/4l_z)^2), the cross-Kerr rates with the other x modes (72),
    the y modes (24) and the z modes (-96), and the frequency shifts each of
    these implies.  The zigzag shift collects the self-interaction plus half
    of every cross-Kerr rate.
    """
    n = modes.n_ions
    zz = n - 1
    gx, gy, lz = modes.gamma_x, modes.gamma_y, modes.lambda_z
    if gx[zz] <= gamma_min:
        raise PerturbativeRegimeError(
            f"gamma_zz = {gx[zz]:.3e} <= {gamma_min:.1e}; too close to the "
            "structural transition for the perturbative expansion"
        )
    kappa = anharmonic_prefactor(trap) ** 2
    wz = trap.omega_z
    d4 = tensors.d4

    omega_si = 36.0 * kappa * wz * d4[zz, zz, zz, zz] / gx[zz]
    dephasing: dict[str, float] = {}
    for m in range(1, n - 1):  # other x modes (COM drops out)
        dephasing[mode_label("x", m)] = (
            72.0 * kappa * wz * d4[m, m, zz, zz] / np.sqrt(gx[m] * gx[zz])
        )
    for m in range(1, n):
        dephasing[mode_label("y", m)] = (
            24.0 * kappa * wz * d4[zz, zz, m, m] / np.sqrt(gx[zz] * gy[m])
        )
    for m in range(1, n):
        dephasing[mode_label("z", m)] = (
            -96.0 * kappa * wz * d4[zz, zz, m, m] / np.sqrt(gx[zz] * lz[m])
        )

    delta = {lab: 0.5 * val for lab, val in dephasing.items()}
    delta["zz"] = omega_si + 0.5 * sum(dephasing.values())
    return KerrParams(omega_si=omega_si, delta=delta, dephasing=dephasing)


def _third_order_couplings(
    trap: TrapConfig, modes: NormalModes, tensors: ModeTensors
) -> tuple[list[tuple[str, int]], dict[tuple[str, int], float], dict]:
    """Mode list, frequencies (units of omega_z) and cubic coefficients of the
    x-mode part of the third-order Hamiltonian (units of omega_z).

    Only cubic couplings with at least one zigzag index are kept: the other
    elements do not touch the zigzag dynamics, and the published shift tables
    are defined with this restriction.
    """
    n = modes.n_ions
    zz = n - 1
    x_modes = [("x", m) for m in range(1, n)]
    z_modes = [("z", m) for m in range(1, n)]
    freqs = {("x", m): float(np.sqrt(modes.gamma_x[m])) for m in range(1, n)}
    freqs.update({("z", m): float(np.sqrt(modes.lambda_z[m])) for m in range(1, n)})
    pref = 3.0 * anharmonic_prefactor(trap)
    g = {}
    for _, a in x_modes:
        for _, b in x_modes:
            if a != zz and b != zz:
                continue
            for _, p in z_modes:
                val = tensors.d3[a, b, p]
                if abs(val) < 1e-14:
                    continue
                denom = (
                    modes.gamma_x[a] * modes.gamma_x[b] * modes.lambda_z[p]
                ) ** 0.25
                g[(("x", a), ("x", b), ("z", p))] = pref * val / denom
    return x_modes + z_modes, freqs, g


def _second_order_shift(
    occ: dict, g: dict, freqs: dict, guard: float
) -> float:
    """Second-order energy shift of the Fock state ``occ`` under the cubic
    coupling ``g``; everything in units of omega_z."""
    amps: dict[tuple, float] = {}
    for (mn, mm, mp), coeff in g.items():
        # factors act right to left: z-mode first, then the two x factors
        for s3 in (1, -1):
            amp3, occ3 = _ladder(occ, mp, s3)
            if amp3 == 0.0:
                continue
            for s2 in (1, -1):
                amp2, occ2 = _ladder(occ3, mm, s2)
                if amp2 == 0.0:
                    continue
                for s1 in (1, -1):
                    amp1, occ1 = _ladder(occ2, mn, s1)
                    if amp1 == 0.0:
                        continue
                    key = tuple(sorted((m, v) for m, v in occ1.items() if v))
                    amps[key] = amps.get(key, 0.0) + coeff * amp3 * amp2 * amp1
    e0 = sum(freqs[m] * v for m, v in occ.items())
    shift = 0.0
    base = tuple(sorted((m, v) for m, v in occ.items() if v))
    for key, amp in amps.items():
        if key == base:
            continue
        e1 = sum(freqs[m] * v for m, v in dict(key).items())
        denom = e0 - e1
        if abs(denom) < guard:
            raise NearResonanceError(
                f"denominator {denom:.3e} omega_z between {dict(base)} and "
                f"{dict(key)}; treat this resonance with resonant_coupling"
            )
        shift += amp * amp / denom
    return shift


def _ladder(occ: dict, mode, sign: int) -> tuple[float, dict]:
    n = occ.get(mode, 0)
    if sign > 0:
        new = dict(occ)
        new[mode] = n + 1
        return float(np.sqrt(n + 1)), new
    if n == 0:
        return 0.0, occ
    new = dict(occ)
    new[mode] = n - 1
    return float(np.sqrt(n)), new


def perturbative_third_order(
    trap: TrapConfig,
    modes: NormalModes,
    tensors: ModeTensors,
    guard: float = 1e-3,
) -> KerrParams:
    """Third-order Kerr parameters from second-order perturbation theory.

    The state-dependent energy shifts of the cubic x-mode Hamiltonian are
    exactly quadratic in the occupation numbers, so evaluating them on the
    states |0>, |1_mu>, |2_mu> and |1_mu 1_nu> determines the Kerr form by an
    exact solve.  Writing the zigzag self term as (Omega_SI/2) n_zz^2, the
    quadratic coefficient gives Omega_SI/2, the bilinear coefficients give the
    dephasing rates, and the linear ones the frequency shifts.  y modes do not
    appear in the x-mode Hamiltonian and their entries are exactly zero.
    """
    mode_list, freqs, g = _third_order_couplings(trap, modes, tensors)
    wz = trap.omega_z
    n = modes.n_ions
    zz = ("x", n - 1)

    def shift(occ: dict) -> float:
        return _second_order_shift(occ, g, freqs, guard)

    base = shift({})
    lin = {mu: shift({mu: 1}) - base for mu in mode_list}
    quad = {
        mu: 0.5 * (shift({mu: 2}) - 2.0 * shift({mu: 1}) + base)
        for mu in mode_list
    }
    cross = {}
    for i, mu in enumerate(mode_list):
        for nu in mode_list[i + 1 :]:
            cross[(mu, nu)] = (
                shift({mu: 1, nu: 1}) - lin[mu] - lin[nu] - base
            )

    # Frequency shifts follow the n^2 writing of the quadratic part, i.e.
    # delta = linear - quadratic coefficient (only the zigzag has a nonzero
    # quadratic part here).
    omega_si = 2.0 * quad[zz] * wz
    dephasing: dict[str, float] = {}
    delta: dict[str, float] = {"zz": (lin[zz] - quad[zz]) * wz}
    for mu in mode_list:
        if mu == zz:
            continue
        pair = (mu, zz) if (mu, zz) in cross else (zz, mu)
        dephasing[mode_label(*mu)] = cross[pair] * wz
        delta[mode_label(*mu)] = (lin[mu] - quad[mu]) * wz
    for m in range(1, n):  # y modes are absent from the x-mode Hamiltonian
        dephasing[mode_label("y", m)] = 0.0
        delta[mode_label("y", m)] = 0.0
    return KerrParams(omega_si=omega_si, delta=delta, dephasing=dephasing)


def combine_orders(third: KerrParams, fourth: KerrParams) -> EffectiveParams:
    """Elementwise sum of the two orders, keeping the breakdown."""
    return EffectiveParams(
        third=third, fourth=fourth, effective=third.combined(fourth)
    )


def derive_effective_params(
    trap: TrapConfig, modes: NormalModes, tensors: ModeTensors
) -> EffectiveParams:
    return combine_orders(
        perturbative_third_order(trap, modes, tensors),
        effective_kerr(trap, modes, tensors),
    )


def resonant_coupling(
    trap: TrapConfig,
    modes: NormalModes,
    tensors: ModeTensors,
    anisotropy_window: float = 0.02,
) -> ResonantCoupling:
    """Exchange rate Omega_T between zigzag pairs and stretch quanta.

    Valid at (and near) the anisotropy 20/63 where 2*omega_zz equals the
    stretch frequency; off resonance the returned detuning is annotated with
    a warning rather than an error.
    """
    n = modes.n_ions
    zz, stretch = n - 1, 1
    pref = 3.0 * anharmonic_prefactor(trap) * trap.omega_z
    omega_t = (
        pref
        * tensors.d3[zz, zz, stretch]
        / (modes.gamma_x[zz] ** 2 * modes.lambda_z[stretch]) ** 0.25
    )
    detuning = (
        2.0 * np.sqrt(modes.gamma_x[zz]) - np.sqrt(modes.lambda_z[stretch])
    ) * trap.omega_z
    on_resonance = abs(modes.alpha_x - RESONANT_ANISOTROPY) <= anisotropy_window
    if not on_resonance:
        warnings.warn(
            f"anisotropy {modes.alpha_x:.5f} is outside the resonance window "
            f"around 20/63; detuning {detuning / (2 * np.pi):.1f} Hz",
            stacklevel=2,
        )
    return ResonantCoupling(
        omega_t=float(omega_t), detuning=float(detuning), on_resonance=on_resonance
    )


def rwa_report(
    trap: TrapConfig, modes: NormalModes, tensors: ModeTensors
) -> list[RWATerm]:
    """Interaction-picture census of the quartic x-mode Hamiltonian.

    For every mode quartet the 16 ladder-operator products are listed with
    their common coefficient and rotation frequency; secular terms rotate at
    exactly zero.  The figure of merit for dropping a non-secular term is
    |coefficient / frequency|.
    """
    n = modes.n_ions
    kappa = anharmonic_prefactor(trap) ** 2
    wz = trap.omega_z
    omega_x = modes.omega_radial_x(wz)
    terms = []
    for quartet in np.ndindex(n, n, n, n):
        denom = np.prod([modes.gamma_x[m] for m in quartet]) ** 0.25
        coeff = 3.0 * kappa * wz * tensors.d4[quartet] / denom
        for signs in np.ndindex(2, 2, 2, 2):
            sgn = [1 if s == 0 else -1 for s in signs]
            freq = float(sum(s * omega_x[m] for s, m in zip(sgn, quartet)))
            secular = abs(freq) < 1e-9 * wz
            label = "".join(
                f"a{m}" + ("+" if s > 0 else "-") for s, m in zip(sgn, quartet)
            )
            ratio = 0.0 if secular else abs(coeff / freq)
            terms.append(
                RWATerm(
                    term_id=label,
                    coefficient=float(coeff),
                    rotation_frequency=freq,
                    ratio=ratio,
                    secular=secular,
                )
            )
    return terms


def max_nonsecular_ratio(terms: list[RWATerm]) -> float:
    return max((t.ratio for t in terms if not t.secular), default=0.0)


def resonant_manifolds(omega_t: float, max_quanta: int) -> list[Manifold]:
    """Eigenvalues of the resonant exchange Hamiltonian per conserved charge.

    The charge n_zz + 2 n_str is conserved, so the Hamiltonian is block
    tridiagonal over the manifolds listed here; blocks for charge < 2 are
    trivial (a single state with eigenvalue 0) and are omitted.
    """
    if max_quanta < 2:
        raise ValueError("max_quanta must be >= 2")
    out = []
    for charge in range(2, max_quanta + 1):
        states = [(ns, charge - 2 * ns) for ns in range(charge // 2 + 1)]
        dim = len(states)
        block = np.zeros((dim, dim))
        for i, (ns, nz) in enumerate(states[:-1]):
            # coupling to (ns + 1, nz - 2)
            block[i, i + 1] = block[i + 1, i] = omega_t * np.sqrt(
                nz * (nz - 1) * (ns + 1)
            )
        out.append(
            Manifold(
                charge=charge,
                states=states,
                eigenvalues=np.sort(np.linalg.eigvalsh(block)),
            )
        )
    return out
