"""Non-interactive PNG figures written beside the tabular outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_spectrum(z, path, title=None):
    z = np.asarray(z)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    th = np.linspace(0, 2 * np.pi, 400)
    ax.plot(np.cos(th), np.sin(th), color="0.7", lw=0.8)
    ax.scatter(z.real, z.imag, s=14, color="C0")
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_curve(curve, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    eta = np.clip(curve.eta, 1e-300, None)
    ax.semilogy(curve.steps, eta, "o-", ms=3, label=f"eta_{curve.kind}")
    if np.all(curve.bound > 0):
        ax.semilogy(curve.steps, curve.bound, "--", color="0.4", label="|z_max|^t")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)


def plot_histograms(samples, path, xlabel, labels=None, bins=40):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, s in enumerate(samples):
        ax.hist(s, bins=bins, histtype="step", density=True,
                label=None if labels is None else labels[i])
    ax.set_xlabel(xlabel)
    if labels is not None:
        ax.legend()
    return _save(fig, path)


def plot_spacings(edges, counts, path, label=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    centers = 0.5 * (edges[1:] + edges[:-1])
    ax.step(centers, counts, where="mid", label=label)
    s = np.linspace(0, edges[-1], 200)
    # Wigner surmise for the unitary class, for orientation only
    ax.plot(s, 32 / np.pi**2 * s**2 * np.exp(-4 * s**2 / np.pi), "--", color="0.4", label="GUE surmise")
    ax.set_xlabel("s")
    ax.set_ylabel("P(s)")
    ax.legend()
    return _save(fig, path)


def plot_expectations(phases, values, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, name in enumerate("xyz"):
        ax.scatter(phases, values[:, k], s=3, label=f"<sigma_{name}>")
    ax.set_xlabel("phi")
    ax.legend(markerscale=3)
    return _save(fig, path)


def plot_hits(entropies, values, path, e_max=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.scatter(np.arange(len(entropies)), entropies, c=np.log10(np.maximum(values, 1e-17)), s=16)
    if e_max is not None:
        ax.axhline(e_max, ls=":", color="m")
    ax.set_xlabel("hit")
    ax.set_ylabel("E(U)")
    return _save(fig, path)


def plot_scan(betas, gammas, grid, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.pcolormesh(betas, gammas, np.log10(np.maximum(grid.T, 1e-17)), shading="nearest")
    fig.colorbar(im, ax=ax, label="log10(1 - |z_max|)")
    ax.set_xlabel("J_beta")
    ax.set_ylabel("J_gamma")
    return _save(fig, path)
