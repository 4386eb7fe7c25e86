"""Force-sensing budget of the homodyne readout stage.

After the entangling stage each probe is read out by its own meter
field; the summed phase quadrature Y1 + Y2 accumulates the force at a
rate fixed by the composite meter strength kappa = g*gamma/omega.  All
quantities here are closed forms in the scaled interaction time
tau_scaled = omega * tau; the ODE oracle cross-checks them.

Two conventions for the force-transfer coefficient are provided: the
"consistent" one (default) is the coefficient obtained by integrating
the readout equations of motion, the "printed" one is an alternative
bookkeeping kept for cross-checking.  They coincide at tau_scaled =
2 pi k and disagree elsewhere; the oracle agrees with "consistent".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "SIGNAL_CONSISTENT",
    "SIGNAL_PRINTED",
    "SIGNAL_VARIANTS",
    "UndetectableForceError",
    "MeterParams",
    "FminPoint",
    "DecoherenceBudget",
    "signal_coeff",
    "noise",
    "phi_opt",
    "f_min",
    "sql",
    "decoherence_budget",
]

SIGNAL_CONSISTENT = "consistent"
SIGNAL_PRINTED = "printed"
SIGNAL_VARIANTS = (SIGNAL_CONSISTENT, SIGNAL_PRINTED)


class UndetectableForceError(ValueError):
    """The signal transfer vanishes, so no force resolves at this setting."""


@dataclass(frozen=True)
class MeterParams:
    """Readout settings: meter strength, interaction time, homodyne angle.

    kappa          composite meter strength g*gamma/omega
    tau_scaled     omega * tau, the force integration time in scaled units
    phi            common local-rotation angle applied to the probe state
                   before the force acts
    signal_variant force-transfer convention, one of SIGNAL_VARIANTS
    """

    kappa: float
    tau_scaled: float
    phi: float = 0.0
    signal_variant: str = SIGNAL_CONSISTENT

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.tau_scaled < 0:
            raise ValueError(f"tau_scaled must be nonnegative, got {self.tau_scaled}")
        if self.signal_variant not in SIGNAL_VARIANTS:
            raise ValueError(
                f"signal_variant must be one of {SIGNAL_VARIANTS}, "
                f"got {self.signal_variant!r}"
            )


def signal_coeff(m: MeterParams) -> float:
    """Force-transfer coefficient <Y1 + Y2> / f after time tau."""
    t = m.tau_scaled
    if m.signal_variant == SIGNAL_PRINTED:
        ramp = 1.0 + t - math.cos(t)
    else:
        ramp = t - math.sin(t)
    return 2.0 * math.sqrt(2.0) * m.kappa * ramp


def noise(m: MeterParams, ratio: float, n_th: float) -> float:
    """Variance of Y1 + Y2 after time tau for a squeezed thermal probe pair.

    Five contributions: the squeezed and antisqueezed collective probe
    quadratures mapped onto the readout, their cross correlation from
    the rotation angle, the meter back-action, and the shot floor of the
    two meters.  Always >= 1.
    """
    if ratio < 1.0:
        raise ValueError(f"squeeze ratio must be >= 1, got {ratio}")
    if n_th < 0:
        raise ValueError(f"n_th must be nonnegative, got {n_th}")
    t = m.tau_scaled
    k2 = m.kappa**2
    u = math.sin(t)
    w = 1.0 - math.cos(t)
    c, s = math.cos(m.phi), math.sin(m.phi)
    rm2 = ratio**-2
    rp2 = ratio**2
    heat = 1.0 + 2.0 * n_th
    probe = (
        k2 * u**2 * (rm2 * c**2 + rp2 * s**2) * heat
        + k2 * w**2 * (rm2 * s**2 + rp2 * c**2) * heat
        - 2.0 * k2 * u * w * (rm2 - rp2) * s * c * heat
    )
    backaction = 4.0 * k2**2 * (t - u) ** 2
    return probe + backaction + 1.0


def _probe_bracket(phi: float, u: float, w: float, ratio: float) -> float:
    # factored form of the three probe terms of noise(), without kappa or heat
    c, s = math.cos(phi), math.sin(phi)
    return (u * c - w * s) ** 2 / ratio**2 + (u * s + w * c) ** 2 * ratio**2


def phi_opt(tau_scaled: float) -> float:
    """Rotation angle minimizing the readout noise at this interaction time.

    The stationary family is spaced by pi/2; the minimizing branch is
    selected by direct evaluation (it is the same for every squeeze
    ratio > 1, and at ratio 1 the noise does not depend on phi).  The
    result is normalized to (-pi/2, pi/2].
    """
    if tau_scaled < 0:
        raise ValueError(f"tau_scaled must be nonnegative, got {tau_scaled}")
    u = math.sin(tau_scaled)
    w = 1.0 - math.cos(tau_scaled)
    if u == 0.0 and w == 0.0:
        return 0.0
    base = -0.5 * math.atan2(2.0 * u * w, u**2 - w**2)
    candidates = [base + n * math.pi / 2.0 for n in range(4)]
    best = min(candidates, key=lambda phi: _probe_bracket(phi, u, w, 2.0))
    while best <= -math.pi / 2.0:
        best += math.pi
    while best > math.pi / 2.0:
        best -= math.pi
    if best == -math.pi / 2.0:
        best = math.pi / 2.0
    return best


def f_min(m: MeterParams, ratio: float, n_th: float) -> float:
    """Minimum detectable force, sqrt(noise) / |signal|."""
    s = signal_coeff(m)
    if s == 0.0:
        raise UndetectableForceError(
            f"signal transfer vanishes at tau_scaled={m.tau_scaled}"
        )
    return math.sqrt(noise(m, ratio, n_th)) / abs(s)


def sql(m: MeterParams) -> float:
    """Standard quantum limit: f_min of uncoupled ground-state probes."""
    return f_min(replace(m, phi=0.0), 1.0, 0.0)


@dataclass(frozen=True)
class FminPoint:
    """One evaluated point of a sensitivity sweep."""

    tau_scaled: float
    kappa: float
    ratio: float
    n_th: float
    phi: float
    signal: float
    noise: float
    f_min: float
    f_sql: float


@dataclass(frozen=True)
class DecoherenceBudget:
    """Coherence-time bookkeeping of one rotation-plus-readout run.

    ``budget`` is 1 / (gamma_mech * n_th) (infinite when either factor
    vanishes); ``time_used`` is the free-evolution time implementing the
    rotation plus the force integration time, both in physical units.
    """

    budget: float
    rotation_time: float
    force_time: float
    time_used: float
    feasible: bool


def decoherence_budget(p, phi: float, tau: float) -> DecoherenceBudget:
    """Check rotation + readout against the thermal decoherence time.

    The rotation is implemented by free evolution, so a negative angle
    costs the complementary positive one: the smallest nonnegative
    equivalent of phi is charged.  ``tau`` is the physical force time.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    rotation_time = (phi % (2.0 * math.pi)) / p.omega
    time_used = rotation_time + tau
    rate = p.gamma_mech * p.n_th
    budget = math.inf if rate == 0.0 else 1.0 / rate
    return DecoherenceBudget(
        budget=budget,
        rotation_time=rotation_time,
        force_time=tau,
        time_used=time_used,
        feasible=time_used < budget,
    )
