"""Numba kernels for the spiking simulation inner loops."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def lif_layer_kernel(spike_steps, spike_src, out_indptr, out_targets,
                     out_weights, n_steps, n_neurons, decay, v_th, v_r,
                     n_ref):
    """Time-stepped LIF integration of one layer.

    Exact exponential decay between steps; presynaptic spikes binned at
    `spike_steps` add their weight instantaneously at that step.  A neuron
    that crossed threshold is clamped at v_r and unreceptive for `n_ref`
    further steps.  Returns (steps, neuron_ids) of emitted spikes.
    """
    v = np.full(n_neurons, v_r)
    ref = np.zeros(n_neurons, dtype=np.int32)
    recv = np.ones(n_neurons, dtype=np.uint8)

    cap = 1 << 14
    out_steps = np.empty(cap, dtype=np.int64)
    out_ids = np.empty(cap, dtype=np.int32)
    count = 0

    ev = 0
    n_events = spike_steps.shape[0]
    for s in range(n_steps):
        for i in range(n_neurons):
            if ref[i] > 0:
                ref[i] -= 1
                v[i] = v_r
                recv[i] = 0
            else:
                v[i] *= decay
                recv[i] = 1
        while ev < n_events and spike_steps[ev] == s:
            j = spike_src[ev]
            for kk in range(out_indptr[j], out_indptr[j + 1]):
                tgt = out_targets[kk]
                if recv[tgt]:
                    v[tgt] += out_weights[kk]
            ev += 1
        for i in range(n_neurons):
            if recv[i] and v[i] >= v_th:
                if count == cap:
                    cap *= 2
                    ns = np.empty(cap, dtype=np.int64)
                    ni = np.empty(cap, dtype=np.int32)
                    ns[:count] = out_steps
                    ni[:count] = out_ids
                    out_steps = ns
                    out_ids = ni
                out_steps[count] = s
                out_ids[count] = i
                count += 1
                v[i] = v_r
                ref[i] = n_ref
    return out_steps[:count], out_ids[:count]


@njit(cache=True, nogil=True)
def ou_first_passage_kernel(mu_hat, sigma_hat, tau_m, v_th, v_r, t_ref, dt,
                            n_neurons, n_steps, transient_steps, window_steps,
                            seed):
    """Monte Carlo of the drive-matched OU neuron with threshold/reset.

    dV = (mu_hat - V/tau_m) dt + sigma_hat dW, exact transition between
    steps, Brownian-bridge correction for intra-step threshold crossings.
    Returns (total_spikes, window_counts) where window_counts holds
    non-overlapping per-window spike counts pooled over neurons.
    """
    np.random.seed(seed)
    alpha = np.exp(-dt / tau_m)
    mean_inf = mu_hat * tau_m
    var_inf = sigma_hat * sigma_hat * tau_m / 2.0
    step_sd = np.sqrt(var_inf * (1.0 - alpha * alpha))
    bridge_denom = sigma_hat * sigma_hat * dt
    n_ref = int(round(t_ref / dt))
    n_windows = (n_steps - transient_steps) // window_steps

    counts = np.zeros(n_neurons * n_windows, dtype=np.int64)
    total = 0

    v = np.empty(n_neurons)
    ref = np.zeros(n_neurons, dtype=np.int64)
    for i in range(n_neurons):
        x = mean_inf + np.sqrt(var_inf) * np.random.normal()
        v[i] = x if x < v_th else v_r

    for s in range(n_steps):
        rec = s >= transient_steps
        wi = (s - transient_steps) // window_steps if rec else -1
        for i in range(n_neurons):
            if ref[i] > 0:
                ref[i] -= 1
                continue
            v_prev = v[i]
            v_new = mean_inf + (v_prev - mean_inf) * alpha \
                + step_sd * np.random.normal()
            fired = v_new >= v_th
            if not fired:
                # bridge probability that the path touched v_th inside
                # the step even though both endpoints are below
                p = np.exp(-2.0 * (v_th - v_prev) * (v_th - v_new)
                           / bridge_denom)
                fired = np.random.random() < p
            if fired:
                if rec and wi < n_windows:
                    total += 1
                    counts[i * n_windows + wi] += 1
                v[i] = v_r
                ref[i] = n_ref
            else:
                v[i] = v_new
    return total, counts
