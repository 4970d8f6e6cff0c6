"""Self-describing text format for calibrated models (versioned ``CVF/1``).

The file is line-oriented ``key = value`` with full-precision floats, so
calibrations are cacheable and every figure can be reproduced from disk.
"""

from .engine import KNOWN, CvfModel, Flattening, Grid
from .model import Cov2

FORMAT_TAG = "CVF/1"


def _fmt(x):
    return repr(float(x))


def dumps_cvf_model(model):
    lines = [FORMAT_TAG]
    lines.append(f"alpha = {_fmt(model.alpha)}")
    lines.append(f"T = {model.grid.T}")
    lines.append(f"center = {_fmt(model.grid.center)}")
    lines.append(f"mode = {model.grid.mode}")
    lines.append(f"measure = {model.measure}")
    lines.append(f"kind = {model.kind}")
    lines.append(f"beta0 = {_fmt(model.beta0)}")
    lines.append(f"cov_mode = {model.cov_mode}")
    if model.cov_mode == KNOWN:
        c = model.cov
        lines.append(f"cov = {_fmt(c.sigma_yy)} {_fmt(c.sigma_xy)} {_fmt(c.sigma_xx)}")
    if model.flattening is None:
        lines.append("flattening = none")
    else:
        f = model.flattening
        flat = "auto" if f.flat_value is None else _fmt(f.flat_value)
        lines.append(
            f"flattening = {_fmt(f.ratio_threshold)} {_fmt(f.k_low)} {_fmt(f.k_high)} {flat}"
        )
    lines.append("offsets = " + " ".join(_fmt(c) for c in model.grid.offsets))
    lines.append("k = " + " ".join(_fmt(v) for v in model.k))
    return "\n".join(lines) + "\n"


def loads_cvf_model(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_TAG:
        raise ValueError(f"not a {FORMAT_TAG} file")
    fields = {}
    for ln in lines[1:]:
        key, _, value = ln.partition("=")
        fields[key.strip()] = value.strip()
    try:
        grid = Grid(
            offsets=tuple(float(v) for v in fields["offsets"].split()),
            T=int(fields["T"]),
            center=float(fields["center"]),
            mode=fields["mode"],
        )
        cov_mode = fields["cov_mode"]
        cov = None
        if cov_mode == KNOWN:
            syy, sxy, sxx = (float(v) for v in fields["cov"].split())
            cov = Cov2(sigma_yy=syy, sigma_xy=sxy, sigma_xx=sxx)
        flattening = None
        if fields["flattening"] != "none":
            parts = fields["flattening"].split()
            flattening = Flattening(
                ratio_threshold=float(parts[0]),
                k_low=float(parts[1]),
                k_high=float(parts[2]),
                flat_value=None if parts[3] == "auto" else float(parts[3]),
            )
        return CvfModel(
            grid=grid,
            k=tuple(float(v) for v in fields["k"].split()),
            alpha=float(fields["alpha"]),
            measure=fields["measure"],
            cov_mode=cov_mode,
            cov=cov,
            kind=fields["kind"],
            beta0=float(fields["beta0"]),
            flattening=flattening,
        )
    except KeyError as exc:
        raise ValueError(f"missing field {exc} in {FORMAT_TAG} file") from exc


def save_cvf_model(model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_cvf_model(model))


def load_cvf_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_cvf_model(fh.read())
