"""Static SVG figures for experiment results."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ExperimentResult, ScenarioKind  # noqa: E402

REGION_CODES = {"I_II": 0, "III": 1, "IV": 2, "V": 3, "Border": 4}
REGION_COLORS = ["#9ecae1", "#a1d99b", "#fdae6b", "#fc9272", "#252525"]

# fixed metadata keeps the SVG bytes a function of the data alone
plt.rcParams["svg.hashsalt"] = "bgmarket"


def _save(fig, out: Path, name: str, res: ExperimentResult, chash: str) -> str:
    fig.suptitle(res.scenario)
    fig.text(0.99, 0.005, f"config {chash}", ha="right", va="bottom", fontsize=6, color="0.4")
    fname = f"{name}.svg"
    try:
        fig.savefig(
            out / fname,
            format="svg",
            metadata={"Title": res.scenario, "Description": f"config hash {chash}", "Date": None},
        )
    except OSError as exc:
        raise OSError(f"cannot write {out / fname}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)
    return fname


def _timeseries(res, out, chash):
    cols = res.series["trajectory"]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    axes[0].plot(cols["t"], cols["P"], label="P")
    axes[1].plot(cols["t"], cols["Psi"], label="Psi", color="C1")
    if "P_inf" in res.metrics:
        axes[0].axhline(res.metrics["P_inf"], ls="--", color="0.5", lw=0.8, label="P_inf")
        axes[1].axhline(0.0, ls="--", color="0.5", lw=0.8, label="Psi_inf")
    axes[0].set_ylabel("log price P")
    axes[1].set_ylabel("chartist estimate Psi")
    axes[1].set_xlabel("time t")
    for ax in axes:
        ax.legend(loc="best", fontsize=8)
    return [_save(fig, out, "trajectory", res, chash)]


def _comparison(res, out, chash):
    c = res.series["comparison"]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 7))
    axes[0].plot(c["t"], c["P_full"], label="full")
    axes[0].plot(c["t"], c["P_reduced"], "--", label="reduced")
    axes[1].plot(c["t"], c["Psi_full"], label="full")
    axes[1].plot(c["t"], c["Psi_reduced"], "--", label="reduced")
    d = np.where(c["distance"] > 0, c["distance"], np.nan)
    axes[2].semilogy(c["t"], d, color="C3")
    axes[0].set_ylabel("P")
    axes[1].set_ylabel("Psi")
    axes[2].set_ylabel("distance")
    axes[2].set_xlabel("time t")
    axes[0].legend(fontsize=8)
    axes[1].legend(fontsize=8)
    return [_save(fig, out, "comparison", res, chash)]


def _sweep(res, out, chash):
    s = res.series["sweep"]
    names = list(s)
    x, y = s[names[0]], s[names[1]]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(x, y, "o-", label=names[1])
    order = res.metrics.get("fitted_order")
    if isinstance(order, float):
        ax.text(0.05, 0.92, f"fitted order {order:.3f}", transform=ax.transAxes)
    ax.set_xlabel(names[0])
    ax.set_ylabel(f"L2 distance at t = {res.metrics.get('t_star', 10):g}")
    ax.legend(fontsize=8)
    return [_save(fig, out, "sweep", res, chash)]


def _degenerate(res, out, chash):
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    for name, c in res.series.items():
        label = name.replace("trajectory_", "")
        axes[0].plot(c["t"], c["P"], label=label)
        axes[1].plot(c["t"], c["Psi"], label=label)
    axes[0].set_ylabel("P")
    axes[1].set_ylabel("Psi")
    axes[1].set_xlabel("time t")
    axes[0].legend(fontsize=8)
    return [_save(fig, out, "trajectories", res, chash)]


def _repelling(res, out, chash):
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6, 7))
    red = res.series["reduced"]
    for tag, style in (("on_manifold", "-"), ("off_manifold", ":")):
        c = res.series[f"full_{tag}"]
        axes[0].plot(c["t"], c["P"], style, label=f"full, {tag.replace('_', ' ')}")
        axes[1].plot(c["t"], c["Psi"], style, label=f"full, {tag.replace('_', ' ')}")
        axes[2].semilogy(c["t"], np.where(c["residual"] > 0, c["residual"], np.nan), style, label=tag)
    axes[0].plot(red["t"], red["P"], "--", color="k", label="formal reduced")
    axes[1].plot(red["t"], red["Psi"], "--", color="k", label="formal reduced")
    # the formal reduced solution explodes; keep the full runs readable
    for ax, col in zip(axes[:2], ("P", "Psi")):
        full = np.concatenate([res.series[f"full_{t}"][col] for t in ("on_manifold", "off_manifold")])
        lo, hi = full.min(), full.max()
        pad = 0.25 * max(hi - lo, 1.0)
        ax.set_ylim(lo - pad, hi + pad)
    axes[0].set_ylabel("P")
    axes[1].set_ylabel("Psi")
    axes[2].set_ylabel("manifold residual")
    axes[2].set_xlabel("time t")
    axes[0].legend(fontsize=7)
    axes[2].legend(fontsize=7)
    return [_save(fig, out, "repelling", res, chash)]


def _regions(res, out, chash):
    from matplotlib.colors import ListedColormap

    g = res.series["regions"]
    ga = np.unique(g["gamma_a"])
    bs = np.unique(g["b"])
    codes = np.array([REGION_CODES[v] for v in g["region"]]).reshape(len(bs), len(ga))
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.pcolormesh(ga, bs, codes, cmap=ListedColormap(REGION_COLORS), vmin=-0.5, vmax=4.5, shading="nearest")
    bd = res.series["boundaries"]
    ax.plot(bd["gamma_a"], bd["stability"], "k-", label="b = eps + gamma a")
    ax.plot(bd["gamma_a"], bd["oscillation_lower"], "r-", label="oscillation band")
    ax.plot(bd["gamma_a"], bd["oscillation_upper"], "r-")
    ax.set_xlim(ga[0], ga[-1])
    ax.set_ylim(bs[0], bs[-1])
    ax.set_xlabel("gamma a")
    ax.set_ylabel("b")
    for lab, code in REGION_CODES.items():
        ax.plot([], [], "s", color=REGION_COLORS[code], label=lab)
    ax.legend(fontsize=7, loc="upper left")
    return [_save(fig, out, "regions", res, chash)]


PLOTTERS = {
    ScenarioKind.FULL_TRAJECTORY: _timeseries,
    ScenarioKind.REDUCED_COMPARISON: _comparison,
    ScenarioKind.CONVERGENCE_SWEEP: _sweep,
    ScenarioKind.DEGENERATE_SWEEP: _degenerate,
    ScenarioKind.REPELLING_DEMO: _repelling,
    ScenarioKind.REGION_GRID: _regions,
}


def plot_result(res: ExperimentResult, out_dir, chash: str = "") -> list[str]:
    """Write the figure(s) for ``res`` into ``out_dir``; return the file names."""
    return PLOTTERS[res.kind](res, Path(out_dir), chash)
