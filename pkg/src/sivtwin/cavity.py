"""Gaussian-beam model of a hemispherical (plano-concave) Fabry-Perot microcavity.

All lengths are SI metres. Mirror transmissions and losses are given in ppm
per round trip. Mode volumes are returned both in m^3 and in units of
wavelength^3, the latter being what the Purcell formula consumes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

PPM = 1e-6


@dataclass(frozen=True)
class CavityGeometry:
    roc: float
    eff_length: float
    wavelength: float = 736.7e-9
    transmission_a: float = 500.0
    transmission_b: float = 500.0
    excess_loss: float = 0.0

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if min(self.transmission_a, self.transmission_b, self.excess_loss) < 0:
            raise ValueError("losses must be non-negative")
        if self.eff_length <= 0:
            raise ValueError("eff_length must be positive")

    @property
    def stable(self) -> bool:
        return 0 < self.eff_length < self.roc

    @property
    def finesse(self) -> float:
        return finesse_from_losses(self.transmission_a, self.transmission_b, self.excess_loss)


@dataclass(frozen=True)
class GaussianMode:
    order: int
    eff_length: float
    wavelength: float
    waist_flat: float
    waist_curved: float
    rayleigh_range: float
    mode_volume: float
    mode_volume_lambda3: float
    position_penalty: float


@dataclass(frozen=True)
class CavityQuality:
    finesse: float
    fsr: float
    cavity_linewidth: float
    q_factor: float


@dataclass(frozen=True)
class EmitterCouplingParams:
    """Reductions of the ideal Purcell factor for a real emitter.

    Defaults are the literature values quoted for SiV-: off-resonant
    branching ratio 0.325 and quantum efficiency of order 0.05.
    """

    branching_offres: float = 0.325
    quantum_efficiency: float = 0.05
    dipole_overlap: float = 1.0
    refractive_index: float = 1.0

    def __post_init__(self):
        for name in ("branching_offres", "quantum_efficiency", "dipole_overlap"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.refractive_index < 1.0:
            raise ValueError("refractive_index must be >= 1")

    @property
    def scale(self) -> float:
        return self.branching_offres * self.quantum_efficiency * self.dipole_overlap


@dataclass(frozen=True)
class PurcellEstimate:
    purcell_curved: float
    beta: float
    purcell_flat: Optional[float] = None
    f_p_ideal: Optional[float] = None


@dataclass(frozen=True)
class ModeOrderResult:
    order: int
    ratio: float
    residual: float
    flagged: bool


def finesse_from_losses(t_a: float, t_b: float, excess: float = 0.0) -> float:
    """Finesse 2*pi / (total round-trip loss), losses in ppm.

    Low-loss approximation; fine below ~1 % total loss.
    """
    total = (t_a + t_b + excess) * PPM
    if total <= 0:
        raise ValueError("lossless cavity undefined")
    return 2 * math.pi / total


def excess_loss_for_finesse(finesse: float, t_a: float, t_b: float) -> float:
    """Excess round-trip loss (ppm) that brings the cavity down to ``finesse``."""
    return 2 * math.pi / finesse / PPM - t_a - t_b


def effective_length_from_order(order: int, wavelength: float) -> float:
    if order < 1:
        raise ValueError(f"mode order must be >= 1, got {order}")
    return order * wavelength / 2


def infer_mode_order(lambda_long: float, lambda_short: float, tol: float = 0.05) -> ModeOrderResult:
    """Longitudinal order n of the short-wavelength mode of an adjacent pair.

    Planar-resonator resonances lambda_n = 2L/n give
    lambda_{n-1}/lambda_n = n/(n-1), hence n = lambda_long/(lambda_long - lambda_short).
    ``residual`` compares the measured ratio with n/(n-1) for the rounded n.
    """
    diff = lambda_long - lambda_short
    if diff <= 0:
        raise ValueError("lambda_long must exceed lambda_short")
    n_float = lambda_long / diff
    n = int(round(n_float))
    if n < 2:
        raise ValueError(f"wavelength pair implies mode order {n_float:.3g} < 2")
    ratio = lambda_long / lambda_short
    residual = abs(ratio - n / (n - 1))
    return ModeOrderResult(order=n, ratio=ratio, residual=residual, flagged=residual > tol)


def order_shift(delta_length: float, wavelength: float) -> float:
    """Change in longitudinal order produced by a length change (2*dL/lambda)."""
    return 2 * delta_length / wavelength


def mode_geometry(geom: CavityGeometry, order: Optional[int] = None) -> GaussianMode:
    """Fundamental-mode waists, Rayleigh range and volume of the half-symmetric cavity.

    The waist sits on the flat mirror. ``position_penalty`` is the intensity
    reduction (w(L)/w0)^2 seen by an emitter on the curved mirror.
    """
    L, R, lam = geom.eff_length, geom.roc, geom.wavelength
    if not L < R:
        raise ValueError(f"unstable resonator: L={L:.4g} m >= RoC={R:.4g} m")
    w0_sq = (lam / math.pi) * math.sqrt(L * (R - L))
    z_r = math.pi * w0_sq / lam
    wL_sq = w0_sq * (1 + (L / z_r) ** 2)
    volume = math.pi / 4 * L * w0_sq
    if order is None:
        order = max(1, int(round(2 * L / lam)))
    return GaussianMode(
        order=order,
        eff_length=L,
        wavelength=lam,
        waist_flat=math.sqrt(w0_sq),
        waist_curved=math.sqrt(wL_sq),
        rayleigh_range=z_r,
        mode_volume=volume,
        mode_volume_lambda3=volume / lam**3,
        position_penalty=wL_sq / w0_sq,
    )


def quality_factor(finesse: float, eff_length: float, wavelength: float) -> CavityQuality:
    if finesse <= 0:
        raise ValueError("finesse must be positive")
    fsr = SPEED_OF_LIGHT / (2 * eff_length)
    linewidth = fsr / finesse
    q = 2 * eff_length * finesse / wavelength
    return CavityQuality(finesse=finesse, fsr=fsr, cavity_linewidth=linewidth, q_factor=q)


def emitter_quality(linewidth: float, wavelength: float) -> float:
    """Quality factor nu/gamma of an optical transition with FWHM ``linewidth`` (Hz)."""
    return SPEED_OF_LIGHT / wavelength / linewidth


def purcell_ideal(q: float, mode_volume: float, refractive_index: float = 1.0) -> float:
    """Ideal Purcell enhancement 3/(4 pi^2) (lambda/n)^3 Q/V with V in lambda^3."""
    if q <= 0 or mode_volume <= 0:
        raise ValueError("Q and V must be positive")
    return 3 / (4 * math.pi**2) * q / (refractive_index**3 * mode_volume)


def purcell_ideal_si(q: float, volume: float, wavelength: float, refractive_index: float = 1.0) -> float:
    """Same as :func:`purcell_ideal` with the volume in m^3."""
    if q <= 0 or volume <= 0:
        raise ValueError("Q and V must be positive")
    return 3 / (4 * math.pi**2) * (wavelength / refractive_index) ** 3 * q / volume


def beta_factor(purcell: float) -> float:
    if purcell < 1:
        raise ValueError(f"Purcell factor must be >= 1, got {purcell}")
    return (purcell - 1) / purcell


def curved_from_flat(purcell_flat: float, position_penalty: float) -> float:
    return 1 + (purcell_flat - 1) / position_penalty


def purcell_effective(
    f_p: float,
    coupling: EmitterCouplingParams = EmitterCouplingParams(),
    position_penalty: float = 1.0,
) -> PurcellEstimate:
    """Emitter-level Purcell factor F_P = 1 + xi * QE * overlap * f_P / penalty.

    The flat-mirror value (penalty 1) is returned alongside; ``beta`` refers to
    the curved-mirror (emitter-position) value.
    """
    if position_penalty < 1:
        raise ValueError("position_penalty must be >= 1")
    flat = 1 + coupling.scale * f_p
    curved = curved_from_flat(flat, position_penalty)
    return PurcellEstimate(
        purcell_curved=curved,
        beta=beta_factor(curved),
        purcell_flat=flat,
        f_p_ideal=f_p,
    )


def scale_purcell_with_finesse(purcell_ref: float, finesse_ref: float, finesse_new: float) -> PurcellEstimate:
    """Rescale a measured Purcell factor to a different finesse (F_P - 1 is linear in Q)."""
    if min(purcell_ref, finesse_ref, finesse_new) <= 0:
        raise ValueError("inputs must be positive")
    fp = 1 + (purcell_ref - 1) * finesse_new / finesse_ref
    return PurcellEstimate(purcell_curved=fp, beta=beta_factor(fp))


def length_stability_bound(finesse: float, wavelength: float) -> float:
    """Length excursion that detunes the cavity by one linewidth: lambda / (2F)."""
    if finesse <= 0:
        raise ValueError("finesse must be positive")
    return wavelength / (2 * finesse)


@dataclass(frozen=True)
class CavityReport:
    geometry: CavityGeometry
    mode: GaussianMode
    quality: CavityQuality
    purcell: PurcellEstimate
    coupling: EmitterCouplingParams = field(default_factory=EmitterCouplingParams)

    def to_dict(self) -> dict:
        return {
            "geometry": asdict(self.geometry),
            "mode": asdict(self.mode),
            "quality": asdict(self.quality),
            "purcell": asdict(self.purcell),
            "coupling": asdict(self.coupling),
        }


def cavity_report(
    geom: CavityGeometry,
    order: Optional[int] = None,
    coupling: EmitterCouplingParams = EmitterCouplingParams(),
    finesse: Optional[float] = None,
) -> CavityReport:
    """Everything the cavity model knows about one length, in one record.

    ``finesse`` overrides the loss-derived finesse of ``geom`` (use it for a
    measured value).
    """
    mode = mode_geometry(geom, order)
    qual = quality_factor(finesse if finesse is not None else geom.finesse, geom.eff_length, geom.wavelength)
    f_p = purcell_ideal(qual.q_factor, mode.mode_volume_lambda3, coupling.refractive_index)
    return CavityReport(
        geometry=geom,
        mode=mode,
        quality=qual,
        purcell=purcell_effective(f_p, coupling, mode.position_penalty),
        coupling=coupling,
    )


def coupling_profile(
    orders,
    roc: float,
    wavelength: float,
    finesse: float,
    refractive_index: float = 1.0,
) -> np.ndarray:
    """f_P(L) / penalty(L) for each mode order: the length dependence of F_P - 1."""
    out = []
    for n in orders:
        L = effective_length_from_order(int(n), wavelength)
        mode = mode_geometry(CavityGeometry(roc=roc, eff_length=L, wavelength=wavelength), int(n))
        q = quality_factor(finesse, L, wavelength).q_factor
        out.append(purcell_ideal(q, mode.mode_volume_lambda3, refractive_index) / mode.position_penalty)
    return np.asarray(out)
