"""Six-variable mean-field reduction of the moment maps.

The layer ensemble is collapsed onto (mu, sigma, rho) for the in-packet
("in", subscript +) and out-of-packet ("out", subscript -) populations.
The pair-averaged numerators/denominators of the correlation map become
closed-form quadratics A/B in the packet size, which in turn yield the
synfire condition and the admissible packet-size interval.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError, DomainError
from .lif import InputSpec, LIFParams
from .moments import MomentState, siegert_rate_and_sigma

log = logging.getLogger(__name__)

_TINY = 1e-300


@dataclass(frozen=True)
class MeanFieldState:
    mu_in: float        # Hz
    mu_out: float       # Hz
    sigma_in: float     # sqrt(count-variance rate), per-ms convention
    sigma_out: float
    rho_in: float
    rho_out: float

    def __post_init__(self):
        if self.mu_in < 0 or self.mu_out < 0:
            raise DomainError("rates must be non-negative")
        if self.sigma_in < 0 or self.sigma_out < 0:
            raise DomainError("deviations must be non-negative")
        if max(abs(self.rho_in), abs(self.rho_out)) > 1.0 + 1e-9:
            raise DomainError("correlations must lie in [-1, 1]")

    def as_tuple(self):
        return (self.mu_in, self.mu_out, self.sigma_in, self.sigma_out,
                self.rho_in, self.rho_out)

    @property
    def gap(self) -> float:
        return self.rho_in - self.rho_out


@dataclass(frozen=True)
class MeanFieldParams:
    n: int = 2000
    w: int = 32
    lam: float = 0.1
    r: float = 1.0
    g: float = 4.0
    w0: float = 0.5

    def __post_init__(self):
        if self.n % 5 != 0 or self.n <= 0:
            raise DomainError("N must be a positive multiple of 5")
        if not 0.0 < self.lam < 1.0:
            raise DomainError("lambda must lie in (0, 1)")
        if self.w < 0 or self.w > self.k_exc:
            raise DomainError("need 0 <= W <= K_E")
        if self.r <= 0 or self.w0 <= 0:
            raise DomainError("r and w0 must be positive")

    @property
    def n_exc(self) -> int:
        return 4 * self.n // 5

    @property
    def k_exc(self) -> int:
        return int(round(self.lam * self.n_exc))

    @property
    def k_inh(self) -> int:
        return int(round(self.lam * self.n / 5))

    @classmethod
    def from_topology(cls, cfg) -> "MeanFieldParams":
        return cls(n=cfg.n, w=cfg.w, lam=cfg.lam, r=cfg.r, w0=cfg.w0)


@dataclass(frozen=True)
class SynfireRegion:
    epsilon: float
    delta: float
    lam: float
    P: float
    Q: float
    R: float
    tau_lo: float
    tau_hi: float
    W_lo: float
    W_hi: float
    feasible: bool
    diagnostic: str = ""


def initial_meanfield(spec: InputSpec) -> MeanFieldState:
    """Reduced description of the layer-0 input ensemble."""
    rate_ms = spec.rate_hz / 1000.0
    sig = math.sqrt(rate_ms)
    return MeanFieldState(spec.rate_hz, spec.rate_hz, sig, sig,
                          spec.packet_correlation,
                          spec.background_correlation)


def compute_AB(state: MeanFieldState, p: MeanFieldParams,
               ne2_printed: bool = False):
    """Closed-form pair-averaged correlation numerators/denominators.

    Returns (A_in, B_in, A_out, B_out).  With `ne2_printed` the (r-1)^2
    coefficient of B_out uses (lambda*N_E)^2 instead of the integer count
    K_E^2; the two coincide whenever lambda*N_E is integral.
    """
    sp, sm = state.sigma_in, state.sigma_out
    rp, rm = state.rho_in, state.rho_out
    if sp == 0.0 and sm == 0.0:
        raise DegenerateInputError("both populations have zero variance")
    w, lam, r, ke = float(p.w), p.lam, p.r, float(p.k_exc)
    sp2, sm2 = sp * sp, sm * sm
    dsig = sp - sm
    ke2_b = (lam * p.n_exc) ** 2 if ne2_printed else ke * ke

    shared = 2.0 * ke * w * sm * dsig + w * w * dsig * dsig
    shared_lam = 2.0 * lam * ke * w * sm * dsig \
        + lam * lam * w * w * dsig * dsig

    a_in = (w * sp2 * (1 - rp)
            + lam * (ke - w) * sm2 * (1 - rm)
            + 4 * r * r * lam * ke * sm2 * (1 - rm)
            + rm * ((r - 1) ** 2 * ke * ke * sm2 + shared)
            + w * w * sp2 * (rp - rm))
    b_in = (w * sp2 * (1 - rp)
            + (ke - w) * sm2 * (1 - rm)
            + 4 * r * r * ke * sm2 * (1 - rm)
            + rm * ((r - 1) ** 2 * ke * ke * sm2 + shared)
            + w * w * sp2 * (rp - rm))
    a_out = (lam * lam * w * sp2 * (1 - rp)
             + lam * (ke - lam * w) * sm2 * (1 - rm)
             + 4 * r * r * lam * ke * sm2 * (1 - rm)
             + rm * ((r - 1) ** 2 * ke * ke * sm2 + shared_lam)
             + lam * lam * w * w * sp2 * (rp - rm))
    b_out = (lam * w * sp2 * (1 - rp)
             + (ke - lam * w) * sm2 * (1 - rm)
             + 4 * r * r * ke * sm2 * (1 - rm)
             + rm * ((r - 1) ** 2 * ke2_b * sm2 + shared_lam)
             + lam * lam * w * w * sp2 * (rp - rm))
    return a_in, b_in, a_out, b_out


def brute_force_AB(topology, sigma, rho, packet, layer: int = 0):
    """Exact pair averages of the correlation-map sums on one sampled
    topology, with weights in units of w0.

    A averages sum_{p,q} w_ip s_p w_jq s_q rho_pq over ordered pairs
    i != j of the class; B averages the i = j diagonal.  Used as the
    oracle for :func:`compute_AB`.
    """
    packet = np.asarray(packet, dtype=int)
    if packet.size == 0:
        raise DomainError("packet must be non-empty")
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    wmat = topology.layer_matrix(layer) / topology.config.w0
    n = wmat.shape[0]
    mask_in = np.zeros(n, dtype=bool)
    mask_in[packet] = True

    u = wmat * sigma[None, :]
    m = u @ rho          # (n, n_prev) rows: u_i Rho
    quad = np.einsum("ij,ij->i", m, u)  # u_i Rho u_i^T

    def class_stats(mask):
        rows = u[mask]
        s = rows.sum(axis=0)
        total = float(s @ rho @ s)
        diag = float(quad[mask].sum())
        count = int(mask.sum())
        b = diag / count
        if count > 1:
            a = (total - diag) / (count * (count - 1))
        else:
            a = float("nan")
        return a, b

    a_in, b_in = class_stats(mask_in)
    a_out, b_out = class_stats(~mask_in)
    return a_in, b_in, a_out, b_out


def _safe_ratio(a, b):
    if abs(b) < _TINY:
        return 0.0
    return a / b


def _clamp_corr(x, label):
    if abs(x) > 1.0:
        log.debug("clamping %s = %.6f into [-1, 1]", label, x)
        return math.copysign(1.0, x)
    return x


def meanfield_step(state: MeanFieldState, p: MeanFieldParams, lif: LIFParams,
                   exact_mixing: bool = False,
                   ne2_printed: bool = False) -> MeanFieldState:
    """One layer of the reduced iteration.

    Correlations update through A/B; rates through the in/out drive sums
    mu_hat_in  = w0 [ W (mu_in - mu_out) + K_E (1 - r) mu_out ]
    mu_hat_out = w0 [ lam W (mu_in - mu_out) + K_E (1 - r) mu_out ]
    with sigma_hat = w0 sqrt(B); then the Siegert maps.
    """
    if state.sigma_in == 0.0 and state.sigma_out == 0.0:
        # silent layer: no input variance anywhere, correlations default
        # to the zero-variance convention
        a_in = b_in = a_out = b_out = 0.0
    else:
        a_in, b_in, a_out, b_out = compute_AB(state, p, ne2_printed)
    rho_in = _clamp_corr(_safe_ratio(a_in, b_in), "rho_in")
    if exact_mixing:
        n, w = p.n, p.w
        a1 = (n - w) ** 2 / (n * n - w * w)
        a2 = 2.0 * w * (n - w) / (n * n - w * w)
        mixed = _safe_ratio(a_out, math.sqrt(max(b_in * b_out, 0.0)))
        rho_out = _clamp_corr(a1 * _safe_ratio(a_out, b_out) + a2 * mixed,
                              "rho_out")
    else:
        rho_out = _clamp_corr(_safe_ratio(a_out, b_out), "rho_out")

    mu_in_ms = state.mu_in / 1000.0
    mu_out_ms = state.mu_out / 1000.0
    drive = p.k_exc * (1.0 - p.r) * mu_out_ms
    mu_hat_in = p.w0 * (p.w * (mu_in_ms - mu_out_ms) + drive)
    mu_hat_out = p.w0 * (p.lam * p.w * (mu_in_ms - mu_out_ms) + drive)
    sig_hat_in = p.w0 * math.sqrt(max(b_in, 0.0))
    sig_hat_out = p.w0 * math.sqrt(max(b_out, 0.0))

    rates, sigs = siegert_rate_and_sigma(
        np.array([mu_hat_in, mu_hat_out]),
        np.array([sig_hat_in, sig_hat_out]), lif)
    # a silent population emits no spikes, so its pairwise output
    # correlation is undefined; the zero-variance convention reports 0
    # (mirroring the silent-neuron policy of the spike estimators)
    if rates[0] <= 0.0:
        rho_in = 0.0
    if rates[1] <= 0.0:
        rho_out = 0.0
    return MeanFieldState(1000.0 * rates[0], 1000.0 * rates[1],
                          float(sigs[0]), float(sigs[1]), rho_in, rho_out)


def iterate_meanfield(state: MeanFieldState, p: MeanFieldParams,
                      lif: LIFParams, max_steps: int = 200,
                      rel_tol: float = 1e-4, plateau_run: int = 3,
                      exact_mixing: bool = False,
                      ne2_printed: bool = False):
    """Iterate to a plateau: every variable moves < rel_tol (relative) for
    `plateau_run` consecutive steps, hard-capped at `max_steps`.

    Returns (trajectory, plateaued); trajectory[0] is the input state.
    """
    traj = [state]
    quiet = 0
    for _ in range(max_steps):
        nxt = meanfield_step(traj[-1], p, lif, exact_mixing, ne2_printed)
        quiet = quiet + 1 if _state_change(traj[-1], nxt) < rel_tol else 0
        traj.append(nxt)
        if quiet >= plateau_run:
            return traj, True
    return traj, False


def _state_change(old: MeanFieldState, new: MeanFieldState) -> float:
    worst = 0.0
    for a, b in zip(old.as_tuple(), new.as_tuple()):
        scale = max(abs(a), abs(b), 1e-9)
        worst = max(worst, abs(a - b) / scale)
    return worst


def check_synfire_condition(epsilon: float, delta: float,
                            lam: float) -> bool:
    """Sufficient condition epsilon > lam (1 - delta) / delta."""
    for name, v in (("epsilon", epsilon), ("delta", delta), ("lambda", lam)):
        if not 0.0 < v < 1.0:
            raise DomainError(f"{name} must lie in (0, 1)")
    return epsilon > lam * (1.0 - delta) / delta


def synfire_region(epsilon: float, delta: float, p: MeanFieldParams,
                   steady: MeanFieldState) -> SynfireRegion:
    """Admissible packet sizes from the steady-state P, Q, R quadratic.

    Each endpoint of the tau interval is mapped to the positive root of
    lam*Q*S^2 + R*S - tau*P = 0; min/max of the interval bound the
    annihilation and invasion packet sizes.
    """
    ke = float(p.k_exc)
    sp, sm = steady.sigma_in, steady.sigma_out
    rp, rm = steady.rho_in, steady.rho_out
    big_p = 5.0 * ke * sm * sm * (1.0 - rm)
    big_q = sp * sp * (rp - rm) + (sp - sm) ** 2 * rm
    big_r = 2.0 * ke * sm * (sp - sm) * rm + sp * sp * (1.0 - rp) \
        - sm * sm * (1.0 - rm)
    tau_lo = (1.0 - p.lam) / epsilon - 1.0
    tau_hi = (delta - p.lam) / (p.lam * (1.0 - delta))
    feasible = check_synfire_condition(epsilon, delta, p.lam)

    def positive_root(tau):
        if big_q <= 0.0 or big_p <= 0.0 or tau <= 0.0:
            return None
        disc = big_r * big_r + 4.0 * p.lam * big_q * tau * big_p
        roots = [(-big_r + math.sqrt(disc)) / (2.0 * p.lam * big_q),
                 (-big_r - math.sqrt(disc)) / (2.0 * p.lam * big_q)]
        pos = [s for s in roots if s > 0.0]
        return max(pos) if pos else None

    diagnostic = ""
    w_lo = w_hi = float("nan")
    if not feasible:
        diagnostic = "synfire condition fails: tau interval empty"
    else:
        lo, hi = positive_root(tau_lo), positive_root(tau_hi)
        if lo is None or hi is None:
            feasible = False
            diagnostic = ("no positive packet-size root (Q <= 0 or "
                          "tau <= 0 at an endpoint)")
        else:
            w_lo, w_hi = sorted((lo, hi))
    return SynfireRegion(epsilon, delta, p.lam, big_p, big_q, big_r,
                         tau_lo, tau_hi, w_lo, w_hi, feasible, diagnostic)


def classify_attractor(trajectory, epsilon: float, delta: float,
                       plateau_tol: float = 1e-3) -> str:
    """Label the end state: synfire / invasion / annihilation, or
    indeterminate when the trajectory has not plateaued."""
    if len(trajectory) < 2:
        raise DomainError("need at least two states to classify")
    tail = trajectory[-min(4, len(trajectory)):]
    for a, b in zip(tail[:-1], tail[1:]):
        if _state_change(a, b) > plateau_tol:
            return "indeterminate"
    final = trajectory[-1]
    if final.rho_in <= 1.0 - epsilon:
        return "annihilation"
    if abs(final.rho_out) < delta:
        return "synfire"
    return "invasion"


def reduce_to_meanfield(state: MomentState, packet) -> MeanFieldState:
    """Exact packet/complement aggregation of a full moment state."""
    packet = np.asarray(packet, dtype=int)
    n = state.n
    mask = np.zeros(n, dtype=bool)
    mask[packet] = True
    w = int(mask.sum())
    if w == 0 or w == n:
        raise DomainError("packet must be a proper subset")
    mu_in = 1000.0 * float(state.mu[mask].mean())
    mu_out = 1000.0 * float(state.mu[~mask].mean())
    sig_in = float(state.sigma[mask].mean())
    sig_out = float(state.sigma[~mask].mean())
    total_all = float(state.rho.sum()) - n
    sub = state.rho[np.ix_(mask, mask)]
    total_in = float(sub.sum()) - w
    rho_in = total_in / (w * (w - 1)) if w > 1 else 1.0
    pairs_rest = n * (n - 1) - w * (w - 1)
    rho_out = (total_all - total_in) / pairs_rest
    return MeanFieldState(mu_in, mu_out, sig_in, sig_out,
                          float(np.clip(rho_in, -1, 1)),
                          float(np.clip(rho_out, -1, 1)))
