"""Figure rendering for the report path; PNGs land next to the CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_bv_scan(result, path) -> Path:
    qs = np.array([r.q for r in result.rows])
    es = np.array([r.max_abs_e for r in result.rows])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(qs, es, ".", ms=3, alpha=0.6, label="max |E(x,q,a)| over (a,q)=1")
    envelope = qs.astype(float) ** -0.25 * result.x**0.5
    ax.plot(qs, envelope, "-", lw=1, color="tab:red", label=r"$q^{-1/4}x^{1/2}$ envelope")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("q")
    ax.set_ylabel("|E|")
    ax.set_title(f"Divisor AP error over moduli, x={result.x:g}, theta={result.theta}")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_smooth_scan(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if result.rows:
        qs = np.array([r.q for r in result.rows])
        ratios = np.array(
            [r.max_abs_e * r.q / result.x ** (1.0 - result.delta_prime) for r in result.rows]
        )
        ax.plot(qs, ratios, "o", ms=4)
        ax.set_xscale("log")
        if result.argmax_q is not None:
            ax.axvline(result.argmax_q, color="tab:red", lw=0.8, ls="--")
    ax.set_xlabel("q (squarefree, smooth)")
    ax.set_ylabel(r"max$_a$ |E| $\cdot$ q / $x^{1-\delta'}$")
    ax.set_title(
        f"Smooth-moduli scan, x={result.x:g}, theta={result.theta}, "
        f"eta={result.eta} ({result.flavor}-relative)"
    )
    return _finish(fig, path)


def plot_hunt(result, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    if result.histogram:
        values = sorted(result.histogram)
        counts = [result.histogram[v] for v in values]
        ax1.bar(values, counts, width=0.9)
        ax1.axvline(result.floor_rho + 0.5, color="tab:red", lw=1, ls="--",
                    label=f"threshold {result.floor_rho}")
        ax1.legend(fontsize=8)
    ax1.set_xlabel("total divisor count over the tuple")
    ax1.set_ylabel("squarefree-product n")
    ax1.set_yscale("log")
    if result.running_min:
        ns = [p[0] for p in result.running_min]
        vals = [p[1] for p in result.running_min]
        ax2.step(ns, vals, where="post")
        ax2.set_xscale("log")
    ax2.set_xlabel("n")
    ax2.set_ylabel("running min of the divisor sum")
    fig.suptitle(f"hunt H={list(result.h)}, x={result.x:g}: {result.hits.size} hits")
    return _finish(fig, path)


def plot_s_of_rho(rho_grid, s_values, break_even, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(rho_grid, s_values, "-o", ms=3)
    ax.axhline(0.0, color="k", lw=0.8)
    if break_even is not None and math.isfinite(break_even):
        ax.axvline(break_even, color="tab:red", lw=0.8, ls="--",
                   label=f"break-even rho = {break_even:.3f}")
        ax.legend(fontsize=8)
    ax.set_xlabel("rho")
    ax.set_ylabel("rho * S1 - S2")
    ax.set_title("Weighted sieve count against the threshold")
    return _finish(fig, path)
