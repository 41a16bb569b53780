"""PNG figures for CLI reports (Agg backend, no timestamps in metadata)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, out_dir, name: str) -> str:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return str(path)


def spectrum_histogram(spectra: dict[str, np.ndarray], out_dir, name="spectrum.png",
                       envelope: float | None = None) -> str:
    """Histogram of |fhat| for each labelled spectrum."""
    fig, ax = plt.subplots(figsize=(6, 4))
    top = max(float(np.max(np.abs(s))) for s in spectra.values())
    bins = np.linspace(0, top * 1.05 + 1e-12, 60)
    for label, s in spectra.items():
        ax.hist(np.abs(s), bins=bins, histtype="step", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("|Fourier coefficient|")
    ax.set_ylabel("count")
    if envelope is not None and envelope <= 4 * top:
        ax.axvline(envelope, color="k", ls="--", lw=1, label="envelope")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, name)


def degree_trajectory(angles: np.ndarray, threshold: float, out_dir, name="odd_degree.png") -> str:
    """|wrap(s beta - pi)| over odd s up to the selected degree."""
    s = 2 * np.arange(angles.size) + 1
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(s, angles, "o-", ms=3)
    ax.axhline(threshold, color="r", ls="--", lw=1, label="threshold")
    ax.set_xlabel("odd degree s")
    ax.set_ylabel("angle to pi")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, name)


def maximand_histogram(values: np.ndarray, mu: float, out_dir, name="maximand.png") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.ravel(values), bins=80)
    ax.axvline(mu, color="r", ls="--", lw=1, label=f"mu = {mu:.4g}")
    ax.set_yscale("log")
    ax.set_xlabel("maximand over (a, b)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, name)


def partition_deviations(devs: np.ndarray, bound: float, out_dir, name="partition.png") -> str:
    """Per-(set, block) deviations | |Y & Z_i| - |Y|/K |."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.ravel(devs), bins=40)
    ax.axvline(bound, color="r", ls="--", lw=1, label="certified bound")
    ax.set_xlabel("deviation")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, name)


def density_steps(values: list[float], labels: list[str], out_dir, name="density.png") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(values) + 1), values, "o-")
    ax.set_xticks(range(1, len(values) + 1), labels)
    ax.set_xlabel("prime")
    ax.set_ylabel("cumulative density")
    fig.tight_layout()
    return _save(fig, out_dir, name)
