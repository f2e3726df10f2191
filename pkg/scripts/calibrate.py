"""Scan LIF calibration constants for the synfire operating regime.

Evaluates the theory-side acceptance gates (fixed-point gap, balance
criticality, r-sweep peak, W-window structure, sparse-density trade-off)
on a grid of (w0, T_ref, tau_m) and prints a score table.
"""

import argparse
import itertools

import numpy as np

from synfire.lif import InputSpec, LIFParams
from synfire.meanfield import (MeanFieldParams, classify_attractor,
                               initial_meanfield, iterate_meanfield,
                               synfire_region)


def fixed_point(w0, lif, n=2000, w=32, lam=0.1, r=1.0, spec=None,
                max_steps=200):
    spec = spec or InputSpec()
    p = MeanFieldParams(n=n, w=w, lam=lam, r=r, w0=w0)
    traj, ok = iterate_meanfield(initial_meanfield(spec), p, lif,
                                 max_steps=max_steps)
    return traj, ok, p


def evaluate(w0, t_ref, tau_m, verbose=False):
    lif = LIFParams(tau_m=tau_m, t_ref=t_ref)
    spec = InputSpec()
    report = {}

    traj, ok, p = fixed_point(w0, lif)
    f = traj[-1]
    report["g1_gap"] = f.gap
    report["g1_mu_out"] = f.mu_out
    report["g1"] = ok and f.gap > 0.6

    traj2, _, _ = fixed_point(w0, lif, n=10000, r=0.8, max_steps=50)
    report["g2_rho_out"] = traj2[-1].rho_out
    report["g2"] = any(s.rho_out > 0.9 for s in traj2)

    traj3, _, _ = fixed_point(w0, lif, r=1.25)
    report["g3_mu_out"] = traj3[-1].mu_out
    report["g3"] = traj3[-1].mu_out < 1.0

    gaps = {}
    for r in (0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15):
        tr, _, _ = fixed_point(w0, lif, r=r)
        gaps[r] = tr[-1].gap
    peak_r = max(gaps, key=gaps.get)
    report["g4_peak_r"] = peak_r
    report["g4"] = 0.95 <= peak_r <= 1.05

    labels = {}
    for wv in range(4, 161, 4):
        tr, _, _ = fixed_point(w0, lif, w=wv)
        labels[wv] = classify_attractor(tr, 0.3, 0.3)
    syn = [wv for wv, lb in labels.items() if lb == "synfire"]
    ann = [wv for wv, lb in labels.items() if lb == "annihilation"]
    inv = [wv for wv, lb in labels.items() if lb == "invasion"]
    report["g5_seq"] = "".join(labels[wv][0] for wv in sorted(labels))
    report["g5_syn"] = (min(syn), max(syn)) if syn else None
    report["g5"] = bool(syn) and (not ann or max(ann) < min(syn)) \
        and (not inv or min(inv) > max(syn)) and bool(inv)

    lam_gap = {}
    mu_small_lam = None
    for lam in (0.05, 0.075, 0.1, 0.15, 0.2):
        best = -2.0
        mu_best = 0.0
        for wv in range(4, int(lam * 1600) + 1, 4):
            tr, _, _ = fixed_point(w0, lif, w=wv, lam=lam)
            if tr[-1].gap > best:
                best, mu_best = tr[-1].gap, tr[-1].mu_out
        lam_gap[lam] = best
        if lam == 0.05:
            mu_small_lam = mu_best
    vals = [lam_gap[l] for l in sorted(lam_gap)]
    inversions = sum(1 for a, b in zip(vals, vals[1:]) if b > a + 0.02)
    report["g6_gaps"] = {k: round(v, 3) for k, v in lam_gap.items()}
    report["g6_mu_lam005"] = mu_small_lam
    report["g6"] = inversions <= 1 and (mu_small_lam is not None
                                        and mu_small_lam < 0.3)

    # region solver vs labels at the reference fixed point
    reg = synfire_region(0.3, 0.3, p, f)
    report["region"] = (round(reg.W_lo, 1), round(reg.W_hi, 1)) \
        if reg.feasible else reg.diagnostic
    score = sum(report[k] for k in ("g1", "g2", "g3", "g4", "g5", "g6"))
    report["score"] = score
    if verbose:
        for k, v in report.items():
            print(f"   {k}: {v}")
    return report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--w0", type=float, nargs="*",
                    default=[1.2, 1.5, 1.8, 2.1, 2.4])
    ap.add_argument("--t-ref", type=float, nargs="*", default=[2.0, 5.0, 8.0])
    ap.add_argument("--tau-m", type=float, nargs="*", default=[10.0, 20.0])
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()

    rows = []
    for w0, t_ref, tau_m in itertools.product(args.w0, args.t_ref,
                                              args.tau_m):
        rep = evaluate(w0, t_ref, tau_m, verbose=args.verbose)
        rows.append((rep["score"], w0, t_ref, tau_m, rep))
        print(f"w0={w0:4.2f} T_ref={t_ref:4.1f} tau_m={tau_m:4.1f} "
              f"score={rep['score']} gap={rep['g1_gap']:+.3f} "
              f"mu_out={rep['g1_mu_out']:7.2f} peak_r={rep['g4_peak_r']} "
              f"synW={rep['g5_syn']} seq={rep['g5_seq']} "
              f"region={rep['region']} "
              f"g={[int(rep[k]) for k in ('g1','g2','g3','g4','g5','g6')]}")
    rows.sort(reverse=True, key=lambda t: t[0])
    print("\nbest:", rows[0][:4])


if __name__ == "__main__":
    main()
