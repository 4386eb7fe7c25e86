"""Closed-form dynamics of the two-probe entangling stage.

Two mechanical probes of frequency omega are coupled through a driven
cavity mode.  Once the cavity is eliminated adiabatically, the relative
coordinate oscillates at a shifted frequency and the ratio of the two
normal-mode frequencies plays the role of a two-mode squeeze parameter.
Switching the coupling off after a quarter period of the fast mode
leaves the probes in a symmetric two-mode squeezed thermal state whose
covariance is diagonal in the (q1 -/+ q2, p1 -/+ p2) combinations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import CovarianceMatrix, VACUUM_VARIANCE

__all__ = [
    "UnstableRegimeError",
    "ProbeParams",
    "EntanglerOutput",
    "EntanglementReport",
    "coupling_strength",
    "relative_mode_frequency",
    "squeeze_ratio",
    "transfer_matrix",
    "thermal_covariance",
    "occupation_from_temperature",
    "entangled_covariance",
    "mode_rotation",
    "rotate",
    "is_entangled",
    "prepare",
]


class UnstableRegimeError(ValueError):
    """The coupling drives the relative mode unstable (imaginary frequency)."""


@dataclass(frozen=True)
class ProbeParams:
    """Physical inputs of the entangling stage.

    omega       mechanical frequency of both probes
    g_opt       single-photon optomechanical coupling
    beta_abs    magnitude of the steady cavity amplitude
    delta       cavity detuning (required whenever the shifted mode
                frequency is evaluated with a nonzero coupling)
    n_th        thermal occupation of each probe before the coupling
    gamma_mech  mechanical damping rate, used only for the decoherence
                time budget
    """

    omega: float
    g_opt: float = 0.0
    beta_abs: float = 0.0
    delta: float | None = None
    n_th: float = 0.0
    gamma_mech: float = 0.0

    def __post_init__(self) -> None:
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.n_th < 0:
            raise ValueError(f"n_th must be nonnegative, got {self.n_th}")
        if self.gamma_mech < 0:
            raise ValueError(f"gamma_mech must be nonnegative, got {self.gamma_mech}")

    @classmethod
    def from_coupling(
        cls,
        omega: float,
        coupling: float,
        *,
        delta: float | None = None,
        n_th: float = 0.0,
        gamma_mech: float = 0.0,
    ) -> "ProbeParams":
        """Build params realizing a given composite coupling (2 g |beta|)^2 / delta.

        The detuning defaults to 100 * omega, deep in the adiabatic regime;
        it only matters when the full (non-adiabatic) model is propagated.
        """
        if delta is None:
            delta = 100.0 * omega if coupling >= 0 else -100.0 * omega
        if delta == 0:
            raise ValueError("delta must be nonzero")
        if coupling * delta < 0:
            raise ValueError("coupling and delta must have the same sign")
        g_opt = math.sqrt(coupling * delta) / 2.0
        return cls(
            omega=omega,
            g_opt=g_opt,
            beta_abs=1.0,
            delta=delta,
            n_th=n_th,
            gamma_mech=gamma_mech,
        )

    @classmethod
    def from_squeeze_ratio(
        cls,
        omega: float,
        ratio: float,
        *,
        delta: float | None = None,
        n_th: float = 0.0,
        gamma_mech: float = 0.0,
    ) -> "ProbeParams":
        """Build params whose normal-mode frequency ratio equals ``ratio`` (>= 1)."""
        if ratio < 1.0:
            raise ValueError(f"squeeze ratio must be >= 1, got {ratio}")
        coupling = omega * (ratio**2 - 1.0) / 2.0
        if coupling == 0.0:
            return cls(omega=omega, delta=delta, n_th=n_th, gamma_mech=gamma_mech)
        return cls.from_coupling(
            omega, coupling, delta=delta, n_th=n_th, gamma_mech=gamma_mech
        )


def coupling_strength(p: ProbeParams) -> float:
    """Composite coupling (2 g |beta|)^2 / delta of the eliminated cavity."""
    if p.g_opt * p.beta_abs == 0.0:
        return 0.0
    if p.delta is None or p.delta == 0:
        raise ValueError("delta must be nonzero when the coupling is nonzero")
    return (2.0 * p.g_opt * p.beta_abs) ** 2 / p.delta


def relative_mode_frequency(p: ProbeParams) -> float:
    """Frequency of the relative normal mode under the cavity-mediated spring."""
    radicand = p.omega * (p.omega + 2.0 * coupling_strength(p))
    if radicand <= 0:
        raise UnstableRegimeError(
            f"relative mode unstable: omega*(omega + 2*coupling) = {radicand}"
        )
    return math.sqrt(radicand)


def squeeze_ratio(p: ProbeParams) -> float:
    """Ratio of the relative-mode frequency to the bare frequency."""
    return relative_mode_frequency(p) / p.omega


def transfer_matrix(p: ProbeParams, t: float) -> np.ndarray:
    """Quadrature transfer matrix of the coupled pair after time ``t``.

    Ordering (q1, p1, q2, p2).  The momentum rows are (1/omega) d/dt of
    the position rows, so the map is symplectic at every time.
    """
    return _transfer(p.omega, relative_mode_frequency(p), t)


def _transfer(omega: float, theta: float, t: float) -> np.ndarray:
    r = theta / omega
    cb, sb = math.cos(omega * t), math.sin(omega * t)  # bare (center-of-mass) mode
    cf, sf = math.cos(theta * t), math.sin(theta * t)  # fast (relative) mode
    qq_same = 0.5 * (cb + cf)
    qq_cross = 0.5 * (cb - cf)
    qp_same = 0.5 * (sb + sf / r)
    qp_cross = 0.5 * (sb - sf / r)
    pq_same = 0.5 * (-sb - r * sf)
    pq_cross = 0.5 * (-sb + r * sf)
    return np.array(
        [
            [qq_same, qp_same, qq_cross, qp_cross],
            [pq_same, qq_same, pq_cross, qq_cross],
            [qq_cross, qp_cross, qq_same, qp_same],
            [pq_cross, qq_cross, pq_same, qq_same],
        ]
    )


def thermal_covariance(n_th: float) -> CovarianceMatrix:
    """Uncorrelated thermal covariance of the two probes, (1/2 + n_th) I."""
    if n_th < 0:
        raise ValueError(f"n_th must be nonnegative, got {n_th}")
    return CovarianceMatrix((VACUUM_VARIANCE + n_th) * np.eye(4))


def occupation_from_temperature(
    temperature: float, omega: float, hbar_over_kb: float = 1.0
) -> float:
    """Effective thermal occupation (coth(h omega / 2 k T) + 1) / 2.

    Note this convention tends to 1, not 0, as temperature -> 0; the rest
    of the package treats n_th as a free input, so callers who prefer the
    Bose occupation can pass that instead.
    """
    if temperature < 0:
        raise ValueError(f"temperature must be nonnegative, got {temperature}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if temperature == 0:
        return 1.0
    x = hbar_over_kb * omega / (2.0 * temperature)
    return (1.0 / math.tanh(x) + 1.0) / 2.0


def entangled_covariance(ratio: float, n_th: float) -> CovarianceMatrix:
    """Probe covariance at coupling switch-off, a quarter period of the fast mode.

    The (q1 - q2) variance is squeezed by ratio**2 and the (p1 - p2)
    variance antisqueezed by the same factor; the + combinations stay
    thermal.  ``ratio`` is the normal-mode frequency ratio, >= 1.
    """
    if ratio < 1.0:
        raise ValueError(f"squeeze ratio must be >= 1, got {ratio}")
    if n_th < 0:
        raise ValueError(f"n_th must be nonnegative, got {n_th}")
    scale = 0.5 * (VACUUM_VARIANCE + n_th)
    rm2 = ratio**-2
    rp2 = ratio**2
    return CovarianceMatrix(
        np.array(
            [
                [scale * (1 + rm2), 0.0, scale * (1 - rm2), 0.0],
                [0.0, scale * (1 + rp2), 0.0, scale * (1 - rp2)],
                [scale * (1 - rm2), 0.0, scale * (1 + rm2), 0.0],
                [0.0, scale * (1 - rp2), 0.0, scale * (1 + rp2)],
            ]
        )
    )


def mode_rotation(phi: float, n_modes: int = 2) -> np.ndarray:
    """Phase-space rotation by ``phi`` applied identically to every mode."""
    c, s = math.cos(phi), math.sin(phi)
    block = np.array([[c, s], [-s, c]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = block
    return out


def rotate(c: CovarianceMatrix, phi: float) -> CovarianceMatrix:
    """Covariance after a common local rotation of every mode by ``phi``."""
    r = mode_rotation(phi, c.n_modes)
    return CovarianceMatrix(r @ c.matrix @ r.T)


@dataclass(frozen=True)
class EntanglementReport:
    """Two separability diagnostics of the switch-off state.

    ``squeeze_margin`` is ratio**2 - (1 + 2 n_th); the state is reported
    entangled when it is positive, i.e. when the squeezed collective
    variance drops below the collective vacuum level.  The EPR variance
    product Var(q1-q2) * Var(p1+p2) and its strict criterion (< 1) are
    reported alongside; the two tests coincide at n_th = 0 but the
    product test is strictly more demanding at n_th > 0.
    """

    ratio: float
    n_th: float
    relative_q_variance: float
    total_p_variance: float
    variance_product: float
    squeeze_margin: float
    product_criterion: bool
    entangled: bool


def is_entangled(ratio: float, n_th: float) -> EntanglementReport:
    """Entanglement verdict and margins for the switch-off state."""
    if ratio < 1.0:
        raise ValueError(f"squeeze ratio must be >= 1, got {ratio}")
    if n_th < 0:
        raise ValueError(f"n_th must be nonnegative, got {n_th}")
    heat = 1.0 + 2.0 * n_th
    rel_q = heat / ratio**2
    tot_p = heat
    product = rel_q * tot_p
    margin = ratio**2 - heat
    return EntanglementReport(
        ratio=ratio,
        n_th=n_th,
        relative_q_variance=rel_q,
        total_p_variance=tot_p,
        variance_product=product,
        squeeze_margin=margin,
        product_criterion=product < 1.0,
        entangled=margin > 0.0,
    )


@dataclass(frozen=True)
class EntanglerOutput:
    """State and bookkeeping of the entangling stage at switch-off."""

    mode_frequency: float
    ratio: float
    switch_off_time: float
    covariance: CovarianceMatrix
    report: EntanglementReport


def prepare(p: ProbeParams) -> EntanglerOutput:
    """Run the entangling stage to its switch-off time and collect the state."""
    theta = relative_mode_frequency(p)
    ratio = theta / p.omega
    if ratio < 1.0:
        raise UnstableRegimeError(
            f"coupling must not soften the relative mode: ratio {ratio} < 1"
        )
    return EntanglerOutput(
        mode_frequency=theta,
        ratio=ratio,
        switch_off_time=math.pi / (2.0 * theta),
        covariance=entangled_covariance(ratio, p.n_th),
        report=is_entangled(ratio, p.n_th),
    )
