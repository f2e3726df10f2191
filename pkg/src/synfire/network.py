"""Layered network construction.

Each layer holds N = 5n neurons: the first 4N/5 indices are excitatory, the
rest inhibitory.  A packet of W excitatory neurons (the first W indices)
carries the synchronous volley; every packet neuron receives all W packet
neurons of the previous layer, and all remaining synapses are uniform
without-replacement draws that bring every neuron to exactly K_E excitatory
and K_I inhibitory inputs.  Excitatory weights are +w0, inhibitory -g*r*w0
with g = 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

G_RATIO = 4.0  # I/E in-degree compensation factor g


@dataclass(frozen=True)
class TopologyConfig:
    n: int = 2000
    w: int = 32
    lam: float = 0.1
    r: float = 1.0
    w0: float = 0.5
    layers: int = 20
    seed: int = 12345

    def __post_init__(self):
        if self.n % 5 != 0 or self.n <= 0:
            raise DomainError("N must be a positive multiple of 5")
        if not 0.0 < self.lam < 1.0:
            raise DomainError("lambda must lie in (0, 1)")
        if self.w < 0:
            raise DomainError("packet size must be non-negative")
        if self.r <= 0 or self.w0 <= 0:
            raise DomainError("r and w0 must be positive")
        if self.layers < 1:
            raise DomainError("need at least one layer")

    @property
    def n_exc(self) -> int:
        return 4 * self.n // 5

    @property
    def n_inh(self) -> int:
        return self.n // 5

    @property
    def k_exc(self) -> int:
        return int(round(self.lam * self.n_exc))

    @property
    def k_inh(self) -> int:
        return int(round(self.lam * self.n_inh))


@dataclass
class LayerSynapses:
    """Outgoing adjacency of one inter-layer projection (CSR by source)."""

    n_neurons: int
    out_indptr: np.ndarray
    out_targets: np.ndarray
    out_weights: np.ndarray


@dataclass
class NetworkTopology:
    """Incoming synapse lists for every layer transition.

    ``in_src[k]`` and ``in_w[k]`` have shape (N, K_E + K_I): row i lists the
    previous-layer sources feeding neuron i of layer k+1 and their signed
    weights.  With ``shared_weights`` all entries reference the same arrays.
    """

    config: TopologyConfig
    in_src: list = field(repr=False, default_factory=list)
    in_w: list = field(repr=False, default_factory=list)
    shared_weights: bool = False
    _out_cache: dict = field(repr=False, default_factory=dict)

    @property
    def layers(self) -> int:
        return len(self.in_src)

    @property
    def packet(self) -> np.ndarray:
        return np.arange(self.config.w)

    def excitatory(self) -> np.ndarray:
        return np.arange(self.config.n_exc)

    def inhibitory(self) -> np.ndarray:
        return np.arange(self.config.n_exc, self.config.n)

    def layer_matrix(self, k):
        """Dense (N, N) weight matrix W with W[i, j] = weight j -> i."""
        cfg = self.config
        mat = np.zeros((cfg.n, cfg.n))
        rows = np.repeat(np.arange(cfg.n), self.in_src[k].shape[1])
        mat[rows, self.in_src[k].ravel()] = self.in_w[k].ravel()
        return mat

    def layer(self, k) -> LayerSynapses:
        """Outgoing adjacency for the k-th projection (cached)."""
        key = 0 if self.shared_weights else k
        if key not in self._out_cache:
            src = self.in_src[key].ravel()
            order = np.argsort(src, kind="stable")
            tgt = np.repeat(np.arange(self.config.n, dtype=np.int32),
                            self.in_src[key].shape[1])[order]
            w = self.in_w[key].ravel()[order]
            indptr = np.zeros(self.config.n + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._out_cache[key] = LayerSynapses(
                self.config.n, indptr, tgt.astype(np.int32), w)
        return self._out_cache[key]


def _draw_layer(cfg: TopologyConfig, rng: np.random.Generator):
    """One realization of incoming synapse lists (N, K_E + K_I)."""
    n, n_exc = cfg.n, cfg.n_exc
    k_e, k_i, w = cfg.k_exc, cfg.k_inh, cfg.w
    if w > k_e:
        raise DomainError(f"packet size {w} exceeds K_E = {k_e}")
    src = np.empty((n, k_e + k_i), dtype=np.int32)
    exc_pool = np.arange(n_exc)
    inh_pool = np.arange(n_exc, n)
    for i in range(n):
        if i < w:
            # packet neuron: all W previous-packet sources, rest random
            # from non-packet excitatory neurons (i itself is in the packet)
            src[i, :w] = exc_pool[:w]
            src[i, w:k_e] = rng.choice(exc_pool[w:], size=k_e - w,
                                       replace=False)
        else:
            pool = exc_pool[exc_pool != i] if i < n_exc else exc_pool
            src[i, :k_e] = rng.choice(pool, size=k_e, replace=False)
        ipool = inh_pool[inh_pool != i] if i >= n_exc else inh_pool
        src[i, k_e:] = rng.choice(ipool, size=k_i, replace=False)
    wgt = np.where(src < n_exc, cfg.w0, -G_RATIO * cfg.r * cfg.w0)
    return src, wgt


def build_feedforward(cfg: TopologyConfig) -> NetworkTopology:
    """Independent synapse realization per layer, deterministic in the seed."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.layers)
    topo = NetworkTopology(config=cfg)
    for ss in streams:
        src, wgt = _draw_layer(cfg, np.random.default_rng(ss))
        topo.in_src.append(src)
        topo.in_w.append(wgt)
    return topo


def build_recurrent(cfg: TopologyConfig, steps: int) -> NetworkTopology:
    """One synapse realization replicated over `steps` layers (weight
    sharing); layer 0 coincides with the feedforward draw for the same seed."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    ss = np.random.SeedSequence(cfg.seed).spawn(1)[0]
    src, wgt = _draw_layer(cfg, np.random.default_rng(ss))
    topo = NetworkTopology(config=cfg, shared_weights=True)
    for _ in range(steps):
        topo.in_src.append(src)
        topo.in_w.append(wgt)
    return topo


@dataclass
class DegreeReport:
    k_exc: int
    k_inh: int
    packet_in_packet: np.ndarray       # per packet neuron, per layer mean
    out_in_packet_mean: float          # mean in-packet sources, non-packet
    out_in_packet_counts: np.ndarray   # raw counts, shape (layers, N - W)


def empirical_degree_report(topo: NetworkTopology) -> DegreeReport:
    """Count per-class in-degrees; raises if the exact-degree contract or
    the signed-weight discipline is violated."""
    cfg = topo.config
    n_exc, k_e, k_i, w = cfg.n_exc, cfg.k_exc, cfg.k_inh, cfg.w
    pkt_counts = []
    out_counts = []
    for k in range(topo.layers):
        src = topo.in_src[k]
        wgt = topo.in_w[k]
        exc = src < n_exc
        if not np.all(exc.sum(axis=1) == k_e):
            raise DomainError("excitatory in-degree violated")
        if not np.all((~exc).sum(axis=1) == k_i):
            raise DomainError("inhibitory in-degree violated")
        if not np.allclose(wgt[exc], cfg.w0) or (
                k_i and not np.allclose(wgt[~exc], -G_RATIO * cfg.r * cfg.w0)):
            raise DomainError("weight sign/magnitude discipline violated")
        in_pkt = (src < w).sum(axis=1)
        if w and not np.all(in_pkt[:w] == w):
            raise DomainError("packet neuron missing packet sources")
        pkt_counts.append(in_pkt[:w])
        out_counts.append(in_pkt[w:])
    out_counts = np.asarray(out_counts)
    return DegreeReport(
        k_exc=k_e, k_inh=k_i,
        packet_in_packet=np.asarray(pkt_counts),
        out_in_packet_mean=float(out_counts.mean()) if out_counts.size else 0.0,
        out_in_packet_counts=out_counts,
    )


# ---------------------------------------------------------------------------
# Line-oriented text export (bit-exact round trip)
# ---------------------------------------------------------------------------

def save_topology(topo: NetworkTopology, path):
    cfg = topo.config
    with open(path, "w") as fh:
        fh.write(f"# synfire-topology v1 n={cfg.n} w={cfg.w} "
                 f"lambda={cfg.lam!r} r={cfg.r!r} w0={cfg.w0!r} "
                 f"layers={topo.layers} seed={cfg.seed} "
                 f"shared={int(topo.shared_weights)}\n")
        last = topo.layers if not topo.shared_weights else 1
        for k in range(last):
            src = topo.in_src[k]
            wgt = topo.in_w[k]
            for i in range(cfg.n):
                for j in range(src.shape[1]):
                    fh.write(f"{k},{i},{src[i, j]},{wgt[i, j]!r}\n")


def load_topology(path) -> NetworkTopology:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# synfire-topology v1 "):
            raise DomainError(f"not a topology file: {path}")
        kv = dict(tok.split("=", 1) for tok in header.split()[3:])
        cfg = TopologyConfig(
            n=int(kv["n"]), w=int(kv["w"]), lam=float(kv["lambda"]),
            r=float(kv["r"]), w0=float(kv["w0"]), layers=int(kv["layers"]),
            seed=int(kv["seed"]))
        shared = bool(int(kv["shared"]))
        k_tot = cfg.k_exc + cfg.k_inh
        stored = 1 if shared else cfg.layers
        src = np.empty((stored, cfg.n, k_tot), dtype=np.int32)
        wgt = np.empty((stored, cfg.n, k_tot), dtype=float)
        fill = np.zeros((stored, cfg.n), dtype=np.int64)
        for line in fh:
            k_s, i_s, j_s, w_s = line.rstrip("\n").split(",")
            k, i = int(k_s), int(i_s)
            pos = fill[k, i]
            src[k, i, pos] = int(j_s)
            wgt[k, i, pos] = float(w_s)
            fill[k, i] = pos + 1
        if not np.all(fill == k_tot):
            raise DomainError("incomplete synapse table")
    topo = NetworkTopology(config=cfg, shared_weights=shared)
    for k in range(cfg.layers):
        kk = 0 if shared else k
        topo.in_src.append(src[kk])
        topo.in_w.append(wgt[kk])
    return topo
