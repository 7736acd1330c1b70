"""Fine structure of the SiV- optical transition C under strain and magnetic field.

Each orbital branch (ground and excited) is an E doublet with spin 1/2, i.e. a
4x4 problem in the basis ``|e+ up>, |e+ down>, |e- up>, |e- down>``.  The
effective Hamiltonian is the usual group-IV one,

    H = -(lambda_SO / 2) L_z S_z
        + strain (couples e+ <-> e-)
        + q g_L mu_B B_z L_z
        + g_s mu_B B . S,

with energies in Hz (E/h).  Only the topology is fixed by the physics
(four lines C1..C4, the inner two spin-conserving); the default parameters
below are common literature values and should be treated as fit inputs.

Transition C is the line between the lower excited doublet and the lower
ground doublet.  Doublets are followed adiabatically from zero field by
projecting onto the zero-field lower doublet, so level crossings in the
ground branch above ~1.5 T do not reshuffle the labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.constants import physical_constants
from scipy.optimize import brentq

MU_B_HZ_PER_T = physical_constants["Bohr magneton in Hz/T"][0]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
L_Z = SIGMA_Z  # orbital angular momentum in the e+/e- basis

SPIN_CONSERVING_THRESHOLD = 0.5


@dataclass(frozen=True)
class BranchParams:
    spin_orbit: float
    strain_alpha: float = 0.0
    strain_beta: float = 0.0
    orbital_g_quench: float = 0.1

    def __post_init__(self):
        if self.spin_orbit < 0:
            raise ValueError("spin_orbit must be >= 0")
        if not 0 <= self.orbital_g_quench <= 1:
            raise ValueError("orbital_g_quench must lie in [0, 1]")

    @property
    def strain(self) -> float:
        return math.hypot(self.strain_alpha, self.strain_beta)


# literature values, not fitted to any particular emitter
GROUND = BranchParams(spin_orbit=46e9)
EXCITED = BranchParams(spin_orbit=255e9)


@dataclass(frozen=True)
class FieldConfig:
    magnitude: float = 0.0
    polar_angle: float = 0.0
    spin_g: float = 2.0
    orbital_g: float = 1.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("field magnitude must be >= 0")
        if not 0 <= self.polar_angle <= math.pi:
            raise ValueError("polar_angle must lie in [0, pi]")

    @property
    def b_parallel(self) -> float:
        return self.magnitude * math.cos(self.polar_angle)

    @property
    def b_perp(self) -> float:
        return self.magnitude * math.sin(self.polar_angle)


@dataclass(frozen=True)
class Transition:
    label: str
    offset: float
    dipole_strength: float
    spin_conserving: bool


@dataclass(frozen=True)
class TransitionSet:
    transitions: tuple
    zero_field_line: float
    degenerate: bool = False

    def __getitem__(self, label: str) -> Transition:
        for t in self.transitions:
            if t.label == label:
                return t
        raise KeyError(label)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([t.offset for t in self.transitions])

    @property
    def spin_conserving(self) -> tuple:
        return tuple(t for t in self.transitions if t.spin_conserving)

    @property
    def splitting(self) -> float:
        """Separation of the two spin-conserving lines (C3 - C2)."""
        if self.degenerate:
            return 0.0
        sc = self.spin_conserving
        if len(sc) != 2:
            raise ValueError(f"expected 2 spin-conserving lines, found {len(sc)}")
        return abs(sc[1].offset - sc[0].offset)


def build_branch_hamiltonian(params: BranchParams, field: FieldConfig) -> np.ndarray:
    h_so = -0.5 * params.spin_orbit * np.kron(L_Z, SIGMA_Z)
    strain = np.array(
        [[0, params.strain_alpha - 1j * params.strain_beta],
         [params.strain_alpha + 1j * params.strain_beta, 0]]
    )
    h_strain = np.kron(strain, ID2)
    h_orb = params.orbital_g_quench * field.orbital_g * MU_B_HZ_PER_T * field.b_parallel * np.kron(L_Z, ID2)
    spin_b = field.b_parallel * SIGMA_Z + field.b_perp * SIGMA_X
    h_spin = 0.5 * field.spin_g * MU_B_HZ_PER_T * np.kron(ID2, spin_b)
    return h_so + h_strain + h_orb + h_spin


def branch_levels(params: BranchParams, field: FieldConfig):
    """Eigenvalues (ascending, Hz) and eigenvectors (columns) of one branch."""
    return np.linalg.eigh(build_branch_hamiltonian(params, field))


def _lower_doublet(h: np.ndarray, h_zero: np.ndarray):
    # adiabatic continuation of the zero-field lower doublet
    _, v0 = np.linalg.eigh(h_zero)
    proj = v0[:, :2] @ v0[:, :2].conj().T
    e, v = np.linalg.eigh(h)
    weight = np.real(np.einsum("ij,ik,kj->j", v.conj(), proj, v))
    idx = np.sort(np.argsort(weight)[-2:])
    return e[idx], v[:, idx]


def _lower_doublet_energy_zero_field(h_zero: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(h_zero)[0])


def transition_frequencies(h_ground, h_ground0, h_excited, h_excited0) -> np.ndarray:
    """Offsets (Hz) of the four C-line components relative to the zero-field line.

    Works on raw Hamiltonians so that it can be checked for basis independence.
    Returns a 2x2 array indexed [excited state, ground state].
    """
    eg, _ = _lower_doublet(h_ground, h_ground0)
    ee, _ = _lower_doublet(h_excited, h_excited0)
    c0 = _lower_doublet_energy_zero_field(h_excited0) - _lower_doublet_energy_zero_field(h_ground0)
    return ee[:, None] - eg[None, :] - c0


def _spin_state(vec: np.ndarray) -> np.ndarray:
    m = vec.reshape(2, 2)  # [orbital, spin]
    return m.T @ m.conj()


def transition_spectrum(
    ground: BranchParams = GROUND,
    excited: BranchParams = EXCITED,
    field: FieldConfig = FieldConfig(),
) -> TransitionSet:
    """C1..C4 ordered by frequency, with spin overlaps as relative dipole strengths."""
    zero = replace(field, magnitude=0.0)
    hg, hg0 = build_branch_hamiltonian(ground, field), build_branch_hamiltonian(ground, zero)
    he, he0 = build_branch_hamiltonian(excited, field), build_branch_hamiltonian(excited, zero)
    eg, vg = _lower_doublet(hg, hg0)
    ee, ve = _lower_doublet(he, he0)
    c0 = _lower_doublet_energy_zero_field(he0) - _lower_doublet_energy_zero_field(hg0)

    rows = []
    for i in range(2):
        for j in range(2):
            overlap = float(np.real(np.trace(_spin_state(ve[:, i]) @ _spin_state(vg[:, j]))))
            rows.append((ee[i] - eg[j] - c0, min(max(overlap, 0.0), 1.0)))
    rows.sort(key=lambda r: r[0])

    scale = max(ground.spin_orbit, excited.spin_orbit, 1.0)
    degenerate = bool(np.ptp([r[0] for r in rows]) < 1e-9 * scale)
    transitions = tuple(
        Transition(
            label=f"C{k + 1}",
            offset=0.0 if degenerate else float(off),
            dipole_strength=strength,
            spin_conserving=strength >= SPIN_CONSERVING_THRESHOLD,
        )
        for k, (off, strength) in enumerate(rows)
    )
    return TransitionSet(transitions=transitions, zero_field_line=float(c0), degenerate=degenerate)


@dataclass(frozen=True)
class SplittingSeries:
    fields: np.ndarray
    splittings: np.ndarray
    slope: float


def linear_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of y = s*x (line through the origin)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = float(x @ x)
    if denom == 0:
        return 0.0
    return float(x @ y) / denom


def splitting_vs_field(
    ground: BranchParams,
    excited: BranchParams,
    fields: Sequence[float],
    template: FieldConfig = FieldConfig(),
) -> SplittingSeries:
    """C2/C3 splitting for each field magnitude (T), plus the fitted slope (Hz/T)."""
    fields = np.asarray(fields, dtype=float)
    if fields.size == 0:
        raise ValueError("empty field list")
    if np.any(np.diff(fields) < 0):
        raise ValueError("fields must be sorted ascending")
    split = np.array([
        transition_spectrum(ground, excited, replace(template, magnitude=float(b))).splitting
        for b in fields
    ])
    return SplittingSeries(fields=fields, splittings=split, slope=linear_slope(fields, split))


def solve_line_offset(
    target: float,
    field: FieldConfig,
    ground: BranchParams = GROUND,
    excited: BranchParams = EXCITED,
    label: str = "C3",
    parameter: str = "strain_alpha",
    branch: str = "ground",
    bracket: tuple = (0.0, 40e9),
):
    """Tune one branch parameter so that line ``label`` sits at ``target`` Hz offset.

    Returns the tuned (ground, excited) pair.  Root finding is by Brent's method
    on the bracket, which must straddle the target.
    """
    if branch not in ("ground", "excited"):
        raise ValueError("branch must be 'ground' or 'excited'")

    def pair(x):
        if branch == "ground":
            return replace(ground, **{parameter: x}), excited
        return ground, replace(excited, **{parameter: x})

    def resid(x):
        g, e = pair(x)
        return transition_spectrum(g, e, field)[label].offset - target

    x = brentq(resid, *bracket, xtol=1e-3, rtol=1e-12)
    return pair(x)
