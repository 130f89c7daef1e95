"""Command-line front end: parameter sweeps written as CSV, JSON or gnuplot tables.

Every subcommand shares the physical parameters (--alpha, --eta, --p-d, --g2)
and the output options. Values may also come from a flat ``key = value``
config file given with --config; flags on the command line win.

Exit status: 0 on success, 2 for invalid parameters, 3 when the request is
physically infeasible (for instance a limiting distance without dark counts).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .approx import t_limit
from .attacks import D2_CLONER_C, AttackStrategy, ClonerKind
from .errors import InfeasibleError, UnboundedDistanceError
from .model import ChannelParams, DetectorParams, SourceModel, link_rates, transmission
from .montecarlo import SimConfig, simulate_link
from .optimize import (
    D_MAX,
    D_MIN,
    SecurityPoint,
    compare_cloners,
    limit_distance,
    make_point,
    optimize_mu,
    scan_distance,
    scan_visibility,
)

OUTPUT_DIR_ENV = "BB84PNS_OUTPUT_DIR"

POINT_COLUMNS = ("mu_star", "S", "I_AB", "I_AE", "Q", "p_c1", "p_b1", "D1", "p_s2", "p_c2", "D2")
DISTANCE_COLUMNS = ("d_km",) + POINT_COLUMNS
TERM_COLUMNS = ("R1I1_over_IAB", "R2s_over_IAB", "R2cI2_over_IAB", "R3_over_IAB")
VISIBILITY_COLUMNS = ("V",) + POINT_COLUMNS + TERM_COLUMNS
COMPARE_COLUMNS = ("cloner",) + POINT_COLUMNS
LIMIT_COLUMNS = ("t_lim", "d_lim_km", "method")
SIM_COLUMNS = ("n_pulses", "c_right_hat", "c_right_err", "c_right", "c_wrong_hat", "c_wrong_err",
               "c_wrong", "q_hat", "q_err", "q")

# defaults for every key that may appear in a config file
DEFAULTS = {
    "alpha": 0.25,
    "eta": 0.1,
    "p_d": 1e-5,
    "g2": 1.0,
    "cloner": "C",
    "v": 1.0,
    "d": 30.0,
    "d_min": D_MIN,
    "d_max": 100.0,
    "step": 5.0,
    "v_min": 0.7,
    "v_max": 1.0,
    "v_step": 0.01,
    "mu_from": None,
    "mu": 0.1,
    "pulses": 10_000_000,
    "seed": 0,
    "format": "csv",
    "output": None,
    "workers": 1,
}

_FLOAT_KEYS = {"alpha", "eta", "p_d", "g2", "v", "d", "d_min", "d_max", "step", "v_min", "v_max",
               "v_step", "mu"}
_INT_KEYS = {"pulses", "seed", "workers"}


class ParameterError(ValueError):
    """A user-supplied parameter is invalid; the message names the key."""


def _key(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def read_config(path: str | os.PathLike) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"config: cannot read {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config: line {lineno} is not 'key = value': {raw.strip()!r}")
        name, value = (s.strip() for s in line.split("=", 1))
        key = _key(name)
        if key not in DEFAULTS:
            raise ParameterError(f"{name}: unknown config key (line {lineno})")
        out[key] = value
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
    except (TypeError, ValueError):
        raise ParameterError(f"{key}: expected a number, got {value!r}") from None
    if key in ("cloner", "mu_from"):
        if str(value).lower() in ("", "none") and key == "mu_from":
            return None
        try:
            return ClonerKind.parse(value)
        except ValueError:
            raise ParameterError(f"{key}: expected one of none, A, C, got {value!r}") from None
    if key == "format" and value not in ("csv", "json", "gnuplot"):
        raise ParameterError(f"format: expected csv, json or gnuplot, got {value!r}")
    return value


def _require(ok: bool, key: str, message: str):
    if not ok:
        raise ParameterError(f"{key}: {message}")


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (in increasing priority) and validate."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    cfg = {k: _coerce(k, v) for k, v in merged.items()}
    cfg["command"] = args.command

    fin = {k: cfg[k] for k in _FLOAT_KEYS}
    for k, v in fin.items():
        _require(math.isfinite(v), k, f"must be finite, got {v}")
    _require(cfg["alpha"] > 0, "alpha", f"must be > 0 dB/km, got {cfg['alpha']}")
    _require(0 < cfg["eta"] <= 1, "eta", f"must lie in (0, 1], got {cfg['eta']}")
    _require(0 <= cfg["p_d"] < 0.5, "p_d", f"must lie in [0, 0.5), got {cfg['p_d']}")
    _require(0 < cfg["g2"] <= 1, "g2", f"must lie in (0, 1], got {cfg['g2']}")
    _require(0 <= cfg["v"] <= 1, "v", f"must lie in [0, 1], got {cfg['v']}")
    _require(cfg["workers"] >= 1, "workers", f"must be >= 1, got {cfg['workers']}")

    cmd = args.command
    if cmd in ("scan-distance", "scan-visibility", "optimal-mu", "compare-cloners"):
        _require(cfg["g2"] == 1.0, "g2", "numerical optimization uses a Poissonian source; g2 must be 1")
    if cmd == "scan-distance":
        _require(cfg["d_min"] >= D_MIN, "d_min", f"must be >= {D_MIN} km, got {cfg['d_min']}")
        _require(cfg["d_max"] <= D_MAX, "d_max", f"must be <= {D_MAX} km, got {cfg['d_max']}")
        _require(cfg["d_max"] >= cfg["d_min"], "d_max", "must not be below d_min")
        _require(cfg["step"] > 0, "step", f"must be > 0, got {cfg['step']}")
    if cmd == "scan-visibility":
        _require(0.7 <= cfg["v_min"] <= 1, "v_min", f"must lie in [0.7, 1], got {cfg['v_min']}")
        _require(0.7 <= cfg["v_max"] <= 1, "v_max", f"must lie in [0.7, 1], got {cfg['v_max']}")
        _require(cfg["v_max"] >= cfg["v_min"], "v_max", "must not be below v_min")
        _require(cfg["v_step"] > 0, "v_step", f"must be > 0, got {cfg['v_step']}")
    if cmd in ("scan-visibility", "optimal-mu", "compare-cloners"):
        _require(D_MIN <= cfg["d"] <= D_MAX, "d", f"must lie in [{D_MIN}, {D_MAX}] km, got {cfg['d']}")
    if cmd == "simulate":
        _require(cfg["d"] >= 0, "d", f"must be >= 0 km, got {cfg['d']}")
        _require(cfg["mu"] >= 0, "mu", f"must be >= 0, got {cfg['mu']}")
        _require(cfg["pulses"] >= 1, "pulses", f"must be >= 1, got {cfg['pulses']}")
        _require(0 <= cfg["seed"] < 2**64, "seed", f"must lie in [0, 2^64), got {cfg['seed']}")
    return cfg


def point_fields(point: SecurityPoint) -> dict:
    a = point.attack
    return {
        "mu_star": point.mu, "S": point.s, "I_AB": point.i_ab, "I_AE": point.i_ae, "Q": point.q,
        "p_c1": a.p_c1, "p_b1": a.p_b1, "D1": a.d1, "p_s2": a.p_s2, "p_c2": a.p_c2, "D2": a.d2,
    }


def strategy_from_row(row: dict, cloner) -> AttackStrategy:
    """Rebuild the attack from an emitted row; p_l1 and p_b2 are the complements."""
    cloner = ClonerKind.parse(cloner)
    p_c1, p_b1 = float(row["p_c1"]), float(row["p_b1"])
    p_s2, p_c2 = float(row["p_s2"]), float(row["p_c2"])
    d2 = D2_CLONER_C if cloner is ClonerKind.C else float(row["D2"])
    return AttackStrategy(
        p_c1=p_c1, p_b1=p_b1, p_l1=max(1.0 - p_c1 - p_b1, 0.0), d1=float(row["D1"]),
        p_s2=p_s2, p_c2=p_c2, p_b2=max(1.0 - p_s2 - p_c2, 0.0), d2=d2, cloner=cloner,
    )


def key_rate_from_row(row: dict, cloner, d: float, V: float, alpha: float = 0.25,
                      detector: DetectorParams = DetectorParams()) -> float:
    """Recompute S from a row's own mu and attack fields."""
    source = SourceModel.poissonian(float(row["mu_star"]))
    channel = ChannelParams(alpha=alpha, d=d, V=V)
    return make_point(source, channel, detector, strategy_from_row(row, cloner)).s


def _cmd_scan_distance(cfg, det):
    res = scan_distance((cfg["d_min"], cfg["d_max"]), cfg["step"], cfg["alpha"], det, cfg["v"],
                        cfg["cloner"], mu_from=cfg["mu_from"], workers=cfg["workers"])
    rows = [{"d_km": p.d, **point_fields(p), "insecure": p.insecure} for p in res.points]
    return DISTANCE_COLUMNS, rows


def _cmd_scan_visibility(cfg, det):
    res = scan_visibility(cfg["d"], (cfg["v_min"], cfg["v_max"]), cfg["v_step"], cfg["alpha"], det,
                          cfg["cloner"], workers=cfg["workers"])
    rows = []
    for p in res.points:
        terms = dict(zip(TERM_COLUMNS, p.information_terms()))
        rows.append({"V": p.V, **point_fields(p), **terms, "insecure": p.insecure})
    return VISIBILITY_COLUMNS, rows


def _cmd_optimal_mu(cfg, det):
    _, p = optimize_mu(cfg["d"], cfg["alpha"], det, cfg["v"], cfg["cloner"])
    return DISTANCE_COLUMNS, [{"d_km": p.d, **point_fields(p), "insecure": p.insecure}]


def _cmd_compare(cfg, det):
    points = compare_cloners(cfg["d"], cfg["alpha"], det, cfg["v"])
    rows = [{"cloner": k.value, **point_fields(p), "insecure": p.insecure} for k, p in points.items()]
    return COMPARE_COLUMNS, rows


def _cmd_limit(cfg, det):
    if cfg["v"] == 1.0:
        t_lim, d_lim = t_limit(det, g2=cfg["g2"], alpha=cfg["alpha"])
        method = "analytic"
    else:
        if cfg["g2"] != 1.0:
            raise ParameterError("g2: the numerical limit for V < 1 uses a Poissonian source; g2 must be 1")
        d_lim = limit_distance(cfg["alpha"], det, cfg["v"], cfg["cloner"])
        if math.isinf(d_lim):
            raise UnboundedDistanceError(f"key rate stays positive up to {D_MAX} km")
        t_lim, method = transmission(cfg["alpha"], d_lim), "numerical"
    return LIMIT_COLUMNS, [{"t_lim": t_lim, "d_lim_km": d_lim, "method": method}]


def _cmd_simulate(cfg, det):
    source = SourceModel.poissonian(cfg["mu"])
    channel = ChannelParams(alpha=cfg["alpha"], d=cfg["d"], V=cfg["v"])
    sim = simulate_link(SimConfig(n_pulses=cfg["pulses"], seed=cfg["seed"], source=source,
                                  channel=channel, detector=det), workers=cfg["workers"])
    link = link_rates(source, channel, det)
    row = {
        "n_pulses": sim.n_pulses,
        "c_right_hat": sim.c_right_hat, "c_right_err": sim.c_right_err, "c_right": link.c_right,
        "c_wrong_hat": sim.c_wrong_hat, "c_wrong_err": sim.c_wrong_err, "c_wrong": link.c_wrong,
        "q_hat": sim.q_hat, "q_err": sim.q_err, "q": link.q,
    }
    return SIM_COLUMNS, [row]


COMMANDS = {
    "scan-distance": _cmd_scan_distance,
    "scan-visibility": _cmd_scan_visibility,
    "optimal-mu": _cmd_optimal_mu,
    "compare-cloners": _cmd_compare,
    "limit-distance": _cmd_limit,
    "simulate": _cmd_simulate,
}


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(columns, rows, fmt: str, cfg: dict) -> str:
    if fmt == "json":
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, ClonerKind):
                return v.value
            return v
        doc = {
            "config": {k: clean(v) for k, v in cfg.items()},
            "columns": list(columns),
            "rows": [{k: clean(v) for k, v in r.items()} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "gnuplot":
        lines = ["# " + " ".join(columns)]
        lines += [" ".join(_cell(r[c]) for c in columns) for r in rows]
        return "\n".join(lines) + "\n"
    lines = [",".join(columns)]
    lines += [",".join(_cell(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def output_path(cfg: dict) -> Path | None:
    """Where to write: --output (relative to $BB84PNS_OUTPUT_DIR if set), else stdout."""
    base = os.environ.get(OUTPUT_DIR_ENV)
    target = cfg["output"]
    if target is None:
        if not base:
            return None
        ext = {"csv": "csv", "json": "json", "gnuplot": "dat"}[cfg["format"]]
        return Path(base) / f"{cfg['command']}.{ext}"
    target = Path(target)
    if base and not target.is_absolute():
        target = Path(base) / target
    return target


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("physics")
    g.add_argument("--alpha", help="fiber attenuation in dB/km (default 0.25)")
    g.add_argument("--eta", help="detector efficiency (default 0.1)")
    g.add_argument("--p-d", dest="p_d", help="dark-count probability per gate (default 1e-5)")
    g.add_argument("--g2", help="two-photon statistics factor, 1 for Poissonian (default 1)")
    g.add_argument("--v", help="visibility (default 1.0)")
    g.add_argument("--cloner", help="2->3 cloner available to Eve: none, A or C (default C)")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json", "gnuplot"), default=None)
    o.add_argument("--output", help=f"output file; relative paths go under ${OUTPUT_DIR_ENV} if set")
    o.add_argument("--config", help="file with 'key = value' lines; flags override it")
    o.add_argument("--workers", help="parallel worker processes for sweeps (default 1)")

    parser = argparse.ArgumentParser(
        prog="bb84pns", description="BB84 key rates under photon-number-splitting and cloning attacks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("scan-distance", parents=[common], help="optimized key rate versus distance")
    p.add_argument("--d-min", dest="d_min", help="first distance in km (default 10)")
    p.add_argument("--d-max", dest="d_max", help="last distance in km (default 100)")
    p.add_argument("--step", help="distance step in km (default 5)")
    p.add_argument("--mu-from", dest="mu_from", help="optimize mu against this cloner instead")

    p = sub.add_parser("scan-visibility", parents=[common], help="optimal attack versus visibility")
    p.add_argument("--d", help="distance in km (default 30)")
    p.add_argument("--v-min", dest="v_min", help="first visibility (default 0.7)")
    p.add_argument("--v-max", dest="v_max", help="last visibility (default 1.0)")
    p.add_argument("--v-step", dest="v_step", help="visibility step (default 0.01)")

    p = sub.add_parser("optimal-mu", parents=[common], help="best mean photon number at one point")
    p.add_argument("--d", help="distance in km (default 30)")

    p = sub.add_parser("compare-cloners", parents=[common],
                       help="key rate against each cloner at the cloner-C-optimal mu")
    p.add_argument("--d", help="distance in km (default 30)")

    sub.add_parser("limit-distance", parents=[common], help="distance at which the key rate vanishes")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of Bob's count rates")
    p.add_argument("--d", help="distance in km (default 30)")
    p.add_argument("--mu", help="mean photon number (default 0.1)")
    p.add_argument("--pulses", help="number of pulses (default 1e7)")
    p.add_argument("--seed", help="master seed (default 0)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        det = DetectorParams(eta=cfg["eta"], p_d=cfg["p_d"])
        columns, rows = COMMANDS[cfg["command"]](cfg, det)
        text = render(columns, rows, cfg["format"], cfg)
        path = output_path(cfg)
        if path is None:
            sys.stdout.write(text)
        else:
            try:
                write_atomic(path, text)
            except OSError as exc:
                raise ParameterError(f"output: cannot write {path}: {exc.strerror}") from None
    except InfeasibleError as exc:
        print(f"bb84pns: infeasible: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"bb84pns: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
