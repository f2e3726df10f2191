"""Per-neuron moment propagation.

Conventions (all times in ms):
  * mu is a spike rate in 1/ms, sigma^2 a count-variance rate in 1/ms, so
    the spike count of a window T has mean mu*T and variance ~ sigma^2*T
    (Poisson train: sigma^2 = mu, CV = 1).
  * the summed synaptic drive of neuron i is an Ornstein-Uhlenbeck input
        dV = (mu_hat - leak*V) dt + sigma_hat dW
    with mu_hat = sum_j w_ij mu_j   [mV/ms]
    and sigma_hat^2 = sum_{j,l} w_ij sigma_j rho_jl w_il sigma_l [mV^2/ms].
  * the mean map S1 and ISI-CV map S2 follow from first-passage-time
    theory of that process via the Dawson-type integrals; the output
    count-variance rate is sigma_out = S2 * sqrt(S1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import DegenerateInputError, DomainError
from .lif import InputSpec, LIFParams

log = logging.getLogger(__name__)

# Upper passage bound beyond which the D- integral exceeds ~exp(70) and the
# firing rate underflows double precision: treat as exactly silent.
_SATURATION_BOUND = 8.5
_RHO_TOL = 1e-9


@dataclass
class MomentState:
    """Rates, count-variance rates and pairwise correlations of one layer."""

    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)

    @property
    def n(self) -> int:
        return self.mu.size

    def validate(self):
        n = self.n
        if self.sigma.shape != (n,) or self.rho.shape != (n, n):
            raise DomainError("inconsistent moment dimensions")
        if np.any(self.mu < 0) or np.any(self.sigma < 0):
            raise DomainError("rates and deviations must be non-negative")
        if not np.allclose(np.diag(self.rho), 1.0, atol=_RHO_TOL):
            raise DomainError("correlation diagonal must be 1")
        if np.any(np.abs(self.rho) > 1.0 + _RHO_TOL):
            raise DomainError("correlations must lie in [-1, 1]")
        if not np.allclose(self.rho, self.rho.T, atol=1e-8):
            raise DomainError("correlation matrix must be symmetric")
        return self


@dataclass
class SynapticSummary:
    """Summed post-synaptic drive statistics feeding one layer."""

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    rho_hat: np.ndarray


def initial_moments(spec: InputSpec, n_neurons: int, packet) -> MomentState:
    """Moment description of the layer-0 input ensemble."""
    packet = np.asarray(packet, dtype=int)
    rate_ms = spec.rate_hz / 1000.0
    mu = np.full(n_neurons, rate_ms)
    sigma = np.full(n_neurons, math.sqrt(rate_ms))
    in_pkt = np.zeros(n_neurons, dtype=bool)
    in_pkt[packet] = True
    rho = np.where(np.outer(~in_pkt, ~in_pkt), spec.background_correlation,
                   0.0)
    rho[np.ix_(in_pkt, in_pkt)] = spec.packet_correlation
    np.fill_diagonal(rho, 1.0)
    return MomentState(mu, sigma, rho)


# ---------------------------------------------------------------------------
# Siegert maps
# ---------------------------------------------------------------------------

def _passage_bounds(mu_hat, sigma_hat, p: LIFParams):
    z = sigma_hat * math.sqrt(p.leak / 2.0)
    a = special.passage_bound(p.v_r, mu_hat, z, p.leak)
    b = special.passage_bound(p.v_th, mu_hat, z, p.leak)
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def _deterministic_rate(mu_hat, p: LIFParams):
    """Noise-free limit: drift must top v_th for the neuron to fire."""
    mu_hat = np.asarray(mu_hat, dtype=float)
    v_inf = mu_hat / p.leak
    out = np.zeros(mu_hat.shape)
    live = v_inf > p.v_th
    if np.any(live):
        t_pass = p.tau_m * np.log((v_inf[live] - p.v_r)
                                  / (v_inf[live] - p.v_th))
        out[live] = 1.0 / (p.t_ref + t_pass)
    return out


def _siegert_arrays(mu_hat, sigma_hat, p: LIFParams):
    """(rate, isi_cv) for strictly positive sigma_hat arrays."""
    a, b = _passage_bounds(mu_hat, sigma_hat, p)
    rate = np.zeros(a.shape)
    cv = np.ones(a.shape)
    act = b < _SATURATION_BOUND
    if np.any(act):
        j1 = special.integral_dminus(a[act], b[act])
        mean_isi = p.t_ref + (2.0 / p.leak) * j1
        j2 = special.integral_dtensor(a[act], b[act])
        rate[act] = 1.0 / mean_isi
        cv[act] = np.sqrt(np.maximum(8.0 * j2, 0.0)) / (p.leak * mean_isi)
    return rate, cv


def _as_float_array(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


def siegert_mean(mu_hat, sigma_hat, p: LIFParams):
    """Mean firing rate (1/ms) of the OU-driven LIF neuron."""
    scalar = np.ndim(mu_hat) == 0 and np.ndim(sigma_hat) == 0
    mu_hat, sigma_hat = np.broadcast_arrays(_as_float_array(mu_hat),
                                            _as_float_array(sigma_hat))
    if np.any(sigma_hat <= 0.0):
        raise DegenerateInputError("sigma_hat must be positive; use the "
                                   "deterministic-limit policy for zero noise")
    rate, _ = _siegert_arrays(mu_hat, sigma_hat, p)
    return float(rate[0]) if scalar else rate


def siegert_cv(mu_hat, sigma_hat, p: LIFParams):
    """ISI coefficient of variation map (the second Siegert expression)."""
    scalar = np.ndim(mu_hat) == 0 and np.ndim(sigma_hat) == 0
    mu_hat, sigma_hat = np.broadcast_arrays(_as_float_array(mu_hat),
                                            _as_float_array(sigma_hat))
    if np.any(sigma_hat <= 0.0):
        raise DegenerateInputError("sigma_hat must be positive")
    _, cv = _siegert_arrays(mu_hat, sigma_hat, p)
    return float(cv[0]) if scalar else cv


def siegert_variance(mu_hat, sigma_hat, p: LIFParams):
    """Output count-variance rate deviation sigma = S2 * sqrt(S1)."""
    scalar = np.ndim(mu_hat) == 0 and np.ndim(sigma_hat) == 0
    mu_hat, sigma_hat = np.broadcast_arrays(_as_float_array(mu_hat),
                                            _as_float_array(sigma_hat))
    if np.any(sigma_hat <= 0.0):
        raise DegenerateInputError("sigma_hat must be positive")
    rate, cv = _siegert_arrays(mu_hat, sigma_hat, p)
    out = cv * np.sqrt(rate)
    return float(out[0]) if scalar else out


def siegert_rate_and_sigma(mu_hat, sigma_hat, p: LIFParams):
    """Vector (rate, sigma_out) applying the deterministic-limit policy
    wherever sigma_hat == 0."""
    mu_hat, sigma_hat = np.broadcast_arrays(_as_float_array(mu_hat),
                                            _as_float_array(sigma_hat))
    rate = np.empty(mu_hat.shape)
    sig = np.zeros(mu_hat.shape)
    noisy = sigma_hat > 0.0
    if np.any(noisy):
        r, cv = _siegert_arrays(mu_hat[noisy], sigma_hat[noisy], p)
        rate[noisy] = r
        sig[noisy] = cv * np.sqrt(r)
    if np.any(~noisy):
        rate[~noisy] = _deterministic_rate(mu_hat[~noisy], p)
    return rate, sig


# ---------------------------------------------------------------------------
# Synaptic summation and the layer map
# ---------------------------------------------------------------------------

def synaptic_summary(prev: MomentState, weights,
                     external=None) -> SynapticSummary:
    """Mean / deviation / correlation of the summed synaptic input.

    `weights` is the (N_out, N_in) signed weight matrix of the projection;
    `external` is an optional (mean, sd) drive added independently to every
    target neuron (variances add).
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != prev.n:
        raise DomainError("weight matrix does not match input dimension")
    mu_hat = w @ prev.mu
    u = w * prev.sigma[None, :]
    cov = u @ prev.rho @ u.T
    var = np.diag(cov).copy()
    neg = var < 0.0
    if np.any(neg):
        if np.any(var < -1e-9):
            log.warning("synaptic variance clipped from %.3e",
                        float(var.min()))
        var[neg] = 0.0
    if external is not None:
        ext_mean, ext_sd = external
        mu_hat = mu_hat + ext_mean
        var = var + np.square(ext_sd)
    sigma_hat = np.sqrt(var)
    denom = np.outer(sigma_hat, sigma_hat)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho_hat = np.where(denom > 0.0, cov / np.where(denom > 0, denom, 1.0),
                           0.0)
    np.clip(rho_hat, -1.0, 1.0, out=rho_hat)
    return SynapticSummary(mu_hat, sigma_hat, rho_hat)


def correlation_map(rho_hat):
    """Input-to-output correlation transfer; the identity map by default.

    Any replacement strategy must be monotone increasing and fix 0 and 1.
    """
    arr = np.asarray(rho_hat, dtype=float)
    if np.any(np.abs(arr) > 1.0 + _RHO_TOL):
        raise DomainError("correlation outside [-1, 1]")
    out = np.clip(arr, -1.0, 1.0)
    return out if arr.ndim else float(out)


def propagate_layer(prev: MomentState, weights, p: LIFParams,
                    external=None, phi=None) -> MomentState:
    """One application of the mean, variance and correlation maps."""
    summary = synaptic_summary(prev, weights, external)
    rate, sigma = siegert_rate_and_sigma(summary.mu_hat, summary.sigma_hat, p)
    phi = correlation_map if phi is None else phi
    rho = np.asarray(phi(summary.rho_hat), dtype=float)
    np.fill_diagonal(rho, 1.0)
    return MomentState(rate, sigma, rho)


def propagate_chain(state: MomentState, topology, p: LIFParams,
                    phi=None) -> list:
    """Iterate the layer map along a built topology; one state per layer."""
    out = []
    for k in range(topology.layers):
        state = propagate_layer(state, topology.layer_matrix(k), p, phi=phi)
        out.append(state)
    return out
