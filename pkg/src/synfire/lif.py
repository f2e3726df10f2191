"""Ground-truth spiking simulation: correlated Poisson inputs and the
time-stepped leaky integrate-and-fire engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import lif_layer_kernel
from .errors import DomainError
from .network import NetworkTopology


@dataclass(frozen=True)
class LIFParams:
    """Neuron constants (milliseconds / millivolts).

    ``leak`` is the decay rate entering the first-passage maps; it defaults
    to 1/tau_m, the convention pinned empirically by the OU Monte Carlo
    cross-validation.
    """

    tau_m: float = 20.0
    v_th: float = 20.0
    v_r: float = 0.0
    t_ref: float = 2.0
    dt: float = 0.1
    leak: float = None

    def __post_init__(self):
        if self.leak is None:
            object.__setattr__(self, "leak", 1.0 / self.tau_m)
        if min(self.tau_m, self.dt, self.t_ref) <= 0:
            raise DomainError("tau_m, dt, T_ref must be positive")
        if self.v_th <= self.v_r:
            raise DomainError("V_th must exceed V_r")
        if self.dt > self.tau_m / 10.0:
            raise DomainError("dt must not exceed tau_m/10")

    @property
    def n_ref_steps(self) -> int:
        return int(round(self.t_ref / self.dt))


@dataclass
class SpikeData:
    """Per-neuron sorted spike times (ms) over [0, duration)."""

    duration: float
    trains: list

    def __post_init__(self):
        self.trains = [np.asarray(t, dtype=float) for t in self.trains]

    @property
    def n_neurons(self) -> int:
        return len(self.trains)

    def validate(self, min_separation=0.0):
        for t in self.trains:
            if t.size and (t[0] < 0.0 or t[-1] >= self.duration):
                raise DomainError("spike time outside recording window")
            if np.any(np.diff(t) < -1e-12):
                raise DomainError("spike times not sorted")
            if min_separation and t.size > 1 and \
                    np.any(np.diff(t) < min_separation - 1e-9):
                raise DomainError("inter-spike interval below T_ref")
        return self

    def rates_hz(self) -> np.ndarray:
        return np.array([1000.0 * t.size / self.duration
                         for t in self.trains])

    def to_events(self, dt):
        """(step, source) event arrays sorted by step then source."""
        steps = []
        srcs = []
        for i, t in enumerate(self.trains):
            s = np.floor(t / dt).astype(np.int64)
            steps.append(s)
            srcs.append(np.full(s.size, i, dtype=np.int32))
        steps = np.concatenate(steps) if steps else np.empty(0, np.int64)
        srcs = np.concatenate(srcs) if srcs else np.empty(0, np.int32)
        order = np.lexsort((srcs, steps))
        return steps[order], srcs[order]


@dataclass(frozen=True)
class InputSpec:
    """Layer-0 stimulus: jittered common-mother packet trains over an
    asynchronous thinned-mother background."""

    rate_hz: float = 20.0
    duration: float = 20000.0
    packet_correlation: float = 0.98
    background_correlation: float = 0.1
    jitter_ms: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.rate_hz <= 0 or self.duration <= 0:
            raise DomainError("rate and duration must be positive")
        if not 0.0 <= self.packet_correlation < 1.0:
            raise DomainError("packet correlation target must lie in [0, 1)")
        if not 0.0 <= self.background_correlation < 1.0:
            raise DomainError("background correlation must lie in [0, 1)")
        if self.jitter_ms < 0:
            raise DomainError("jitter must be non-negative")


def _poisson_times(rng, rate_ms, duration):
    n = rng.poisson(rate_ms * duration)
    return np.sort(rng.uniform(0.0, duration, n))


def generate_inputs(spec: InputSpec, n_neurons: int, packet) -> SpikeData:
    """Build N input trains at the target marginal rate.

    Packet trains are independently jittered copies of one mother Poisson
    process (pairwise count correlation -> 1 for windows >> jitter);
    background trains keep each event of a rate/p mother with probability
    p = background_correlation, which makes every background pair correlate
    at exactly p while staying Poisson at the target rate.
    """
    packet = np.asarray(packet, dtype=int)
    if packet.size and (packet.min() < 0 or packet.max() >= n_neurons):
        raise DomainError("packet indices out of range")
    in_packet = np.zeros(n_neurons, dtype=bool)
    in_packet[packet] = True

    root = np.random.SeedSequence(spec.seed)
    mother_ss, train_root = root.spawn(2)
    mother_rng = np.random.default_rng(mother_ss)
    rate_ms = spec.rate_hz / 1000.0

    packet_mother = _poisson_times(mother_rng, rate_ms, spec.duration)
    p = spec.background_correlation
    bg_mother = _poisson_times(mother_rng, rate_ms / p, spec.duration) \
        if p > 0 else None

    trains = []
    for i, ss in enumerate(train_root.spawn(n_neurons)):
        rng = np.random.default_rng(ss)
        if in_packet[i]:
            t = packet_mother + rng.normal(0.0, spec.jitter_ms,
                                           packet_mother.size) \
                if spec.jitter_ms > 0 else packet_mother.copy()
            t = np.sort(t[(t >= 0.0) & (t < spec.duration)])
        elif bg_mother is not None:
            t = bg_mother[rng.random(bg_mother.size) < p]
        else:
            t = _poisson_times(rng, rate_ms, spec.duration)
        trains.append(t)
    return SpikeData(spec.duration, trains)


def simulate_layer(inputs: SpikeData, layer, p: LIFParams) -> SpikeData:
    """Drive one layer with the given spike trains.

    `layer` is a LayerSynapses view (outgoing adjacency of the projection
    into this layer).  Each presynaptic spike adds its weight (mV) to the
    target potential at the step containing the spike time.
    """
    n_steps = int(math.ceil(inputs.duration / p.dt))
    steps, srcs = inputs.to_events(p.dt)
    out_steps, out_ids = lif_layer_kernel(
        steps, srcs, layer.out_indptr, layer.out_targets, layer.out_weights,
        n_steps, layer.n_neurons, math.exp(-p.dt / p.tau_m), p.v_th, p.v_r,
        p.n_ref_steps)
    trains = [out_steps[out_ids == i] * p.dt for i in range(layer.n_neurons)]
    return SpikeData(inputs.duration, trains)


def simulate_chain(topo: NetworkTopology, inputs: SpikeData,
                   p: LIFParams) -> list:
    """Feed layer k's output to layer k+1; one SpikeData per layer."""
    if inputs.n_neurons != topo.config.n:
        raise DomainError("input train count does not match layer size")
    out = []
    current = inputs
    for k in range(topo.layers):
        current = simulate_layer(current, topo.layer(k), p)
        out.append(current)
    return out


def simulate_recurrent(topo: NetworkTopology, inputs: SpikeData, steps: int,
                       p: LIFParams) -> list:
    """Discrete-time recurrent run: the single shared synapse realization
    is applied at every step."""
    if not topo.shared_weights:
        raise DomainError("recurrent simulation needs a weight-shared "
                          "topology (build_recurrent)")
    if steps > topo.layers:
        raise DomainError("more steps than unfolded layers")
    out = []
    current = inputs
    for _ in range(steps):
        current = simulate_layer(current, topo.layer(0), p)
        out.append(current)
    return out
