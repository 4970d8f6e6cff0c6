"""Render size, surface, and power figures from cvfkit CSV outputs.

Figures are regenerated from CSVs only; nothing numerical is recomputed
here.  Each figure is described by a small flat `key = value` spec file:

    kind = size | surface | power
    input = path/to.csv [, more.csv]
    overlay = path/to/extra.csv          # optional, power only
    out = figures/size_rho0.95           # .svg and .png are appended
    title = Null rejection probabilities # optional
    alpha = 0.10                         # size reference line
    transformed = true                   # surface: logistic G axes

Rendering is deterministic: no random jitter, fixed ordering.
"""

import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cvf-figures"  # deterministic ids
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("size", "surface", "power")

METHOD_STYLE = {
    "cvf": dict(color="#1a5fb4", marker="o", label="similar t-test (CVF)"),
    "normal_quantile": dict(color="#555555", marker="s", label="t-test, normal quantile"),
    "bootstrap_np": dict(color="#c01c28", marker="^", label="bootstrap"),
    "bootstrap_param": dict(color="#e66100", marker="v", label="parametric bootstrap"),
    "subsampling": dict(color="#26a269", marker="d", label="subsampling"),
    "l2": dict(color="#813d9c", marker="x", label="L2 overlay"),
    "umpcu": dict(color="#865e3c", marker="+", label="UMPCU overlay"),
}


class FigureError(Exception):
    """Bad spec or malformed input CSV."""


def parse_spec(path):
    spec = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise FigureError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = body.partition("=")
                spec[key.strip()] = value.strip()
    except OSError as exc:
        raise FigureError(f"cannot read spec {path}: {exc}") from exc
    if spec.get("kind") not in KINDS:
        raise FigureError(f"spec needs kind = one of {KINDS}")
    if "input" not in spec or "out" not in spec:
        raise FigureError("spec needs input = ... and out = ...")
    spec["inputs"] = [p.strip() for p in spec["input"].split(",") if p.strip()]
    spec["overlays"] = [
        p.strip() for p in spec.get("overlay", "").split(",") if p.strip()
    ]
    return spec


def read_csv(path, required):
    """CSV with a leading '#' comment line; returns dict of float columns
    (the method column stays as strings)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FigureError(f"{path} is empty") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise FigureError(f"{path} lacks columns {missing}; header was {header}")
    rows = list(reader)
    if not rows:
        raise FigureError(f"{path} has no data rows")
    columns = {}
    for name in header:
        idx = header.index(name)
        values = [row[idx] for row in rows]
        if name in ("method", "statistic"):
            columns[name] = np.array(values)
        else:
            try:
                columns[name] = np.array([float(v) for v in values])
            except ValueError as exc:
                raise FigureError(f"{path}: non-numeric value in column {name}") from exc
    return columns


def _style(method):
    return METHOD_STYLE.get(
        method, dict(color="#333333", marker=".", label=method)
    )


def render_size(spec):
    alpha = float(spec.get("alpha", 0.10))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for path in spec["inputs"]:
        cols = read_csv(path, ["method", "gamma", "p_hat"])
        for method in sorted(set(cols["method"])):
            mask = cols["method"] == method
            order = np.argsort(cols["gamma"][mask])
            ax.plot(
                cols["gamma"][mask][order],
                cols["p_hat"][mask][order],
                lw=1.4,
                ms=3.5,
                **_style(method),
            )
    ax.axhline(alpha, color="black", lw=0.8, ls="--", label=f"nominal {alpha:g}")
    ax.set_xlabel(r"autoregressive coefficient $\gamma$")
    ax.set_ylabel("null rejection probability")
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False, fontsize=8)
    return fig


def render_surface(spec):
    transformed = spec.get("transformed", "false").lower() in ("true", "1", "yes")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    path = spec["inputs"][0]
    cols = read_csv(path, ["r_gamma", "k_gg", "kappa", "g_ratio", "g_k"])
    if transformed:
        x, y = cols["g_ratio"], cols["g_k"]
        ax.set_xlabel(r"$G(R_\gamma / K_{\gamma\gamma})$")
        ax.set_ylabel(r"$G(K_{\gamma\gamma})$")
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
    else:
        x, y = cols["r_gamma"], cols["k_gg"]
        ax.set_xlabel(r"$R_\gamma$")
        ax.set_ylabel(r"$K_{\gamma\gamma}$")
        # raw axes blow up in the explosive regime; clip to the useful bulk
        ax.set_xlim(np.quantile(x, 0.005), np.quantile(x, 0.995))
        ax.set_ylim(np.quantile(y, 0.005), np.quantile(y, 0.995))
    sc = ax.scatter(x, y, c=cols["kappa"], s=4, cmap="viridis", rasterized=True)
    fig.colorbar(sc, ax=ax, label=r"threshold $\kappa(r)$")
    return fig


def render_power(spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    alpha = float(spec.get("alpha", 0.10))
    c_filter = spec.get("c")
    for path in spec["inputs"] + spec["overlays"]:
        cols = read_csv(path, ["method", "b", "p_hat"])
        keep = np.ones(cols["b"].size, dtype=bool)
        if c_filter is not None and "c" in cols:
            keep = cols["c"] == float(c_filter)
        for method in sorted(set(cols["method"][keep])):
            mask = keep & (cols["method"] == method)
            order = np.argsort(cols["b"][mask])
            ax.plot(
                cols["b"][mask][order],
                cols["p_hat"][mask][order],
                lw=1.4,
                ms=3.5,
                **_style(method),
            )
    ax.axhline(alpha, color="black", lw=0.8, ls="--", label=f"nominal {alpha:g}")
    ax.set_xlabel("local alternative index $b$")
    ax.set_ylabel("rejection probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False, fontsize=8)
    return fig


RENDERERS = {"size": render_size, "surface": render_surface, "power": render_power}


def render(spec):
    """Render one figure spec; writes <out>.svg and <out>.png."""
    if isinstance(spec, str):
        spec = parse_spec(spec)
    fig = RENDERERS[spec["kind"]](spec)
    if "title" in spec:
        fig.axes[0].set_title(spec["title"])
    out = spec["out"]
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    written = []
    for ext in ("svg", "png"):
        target = f"{out}.{ext}"
        metadata = {"Date": None} if ext == "svg" else None
        fig.savefig(target, dpi=150, bbox_inches="tight", metadata=metadata)
        written.append(target)
    plt.close(fig)
    return written


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: cvf-figures SPEC [SPEC ...]", file=sys.stderr)
        return 2
    try:
        for spec_path in argv:
            for target in render(spec_path):
                print(target)
    except FigureError as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
