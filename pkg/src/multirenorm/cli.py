"""Batch front end: multirenorm <command> [flags].

Each run writes <out>/<command>.json (deterministic payload), a sibling
.meta.json with wall-clock data, and CSV series where a command has them.
Exit status: 0 ok, 1 domain error, 2 bad input or config.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass

from . import __version__
from . import combinatorics as comb
from . import complex_ext as cx
from . import nest as nst
from . import tuner
from .boxmap import extend
from .errors import ConfigError, ParseError, RenormError
from .maps import build_quadratic_family
from .renorm import renorm_tower, renormalize

log = logging.getLogger("multirenorm")

COMMANDS = ("analyze", "nest", "cascade", "tune", "delta", "alpha", "tower", "contraction",
            "julia", "external", "combinatorics")
SCHEMA = "v1"


@dataclass(frozen=True)
class RunConfig:
    b: tuple = ()
    word: str | None = None
    depth: int = 8
    max_period: int | None = None
    precision_bits: int = 53
    horizon: int | None = None  # None: adaptive
    n_max: int = 8
    n_type: int = 1
    m: int = 2
    samples: int = 256
    raster: int = 64
    eta: float = 20.0
    out: str = "out"
    cache_dir: str | None = None

    def __post_init__(self):
        checks = [
            (0 <= self.depth <= 1024, "depth must be in [0, 1024]"),
            (self.max_period is None or 2 <= self.max_period <= 64, "max_period must be in [2, 64]"),
            (53 <= self.precision_bits <= 4096, "precision_bits must be in [53, 4096]"),
            (self.horizon is None or 1 <= self.horizon <= 1 << 20, "horizon must be in [1, 2^20]"),
            (3 <= self.n_max <= 20, "n_max must be in [3, 20]"),
            (1 <= self.n_type <= 4, "n_type must be in [1, 4]"),
            (2 <= self.m <= 16, "m must be in [2, 16]"),
            (1 <= self.samples <= 1 << 16, "samples must be in [1, 65536]"),
            (1 <= self.raster <= 4096, "raster must be in [1, 4096]"),
            (self.eta > 1, "eta must exceed 1"),
            (all(math.isfinite(x) for x in self.b), "b entries must be finite"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    def echo(self):
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in dataclasses.asdict(self).items() if k not in ("out", "cache_dir")}


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key, text):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key: {key}")
    text = text.strip()
    try:
        if key == "b":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if key in ("word", "out", "cache_dir"):
            return text
        if key in ("max_period", "horizon"):
            return None if text.lower() in ("", "none") else int(text)
        if key == "eta":
            return float(text)
        return int(text)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {text!r}") from e


def load_config(path) -> dict:
    """Flat key = value file; '#' starts a comment."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return {k: _coerce(k, v) for k, v in cp["run"].items()}


def parse_word(text: str):
    """'M2^n' or canonical strings joined by '*'."""
    text = text.strip()
    m = re.fullmatch(r"M2\^(\d+)", text)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise ParseError("parse: invalid canonical combinatorics")
        return [comb.M2] * n
    if text == "M2":
        return [comb.M2]
    return [comb.parse(part) for part in text.split("*")]


# ------------------------------------------------------------------ cache
def _cache_path(cache_dir, word, spec):
    key = json.dumps({"word": [w.canonical for w in word], **spec.key()}, sort_keys=True)
    return os.path.join(cache_dir, hashlib.sha256(key.encode()).hexdigest() + ".json"), key


def cache_lookup(cache_dir, word, spec):
    """Stored TuneResult for this word, precision and box, else None."""
    if not cache_dir:
        return None
    path, key = _cache_path(cache_dir, word, spec)
    if not os.path.exists(path):
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            entry = json.load(fh)
        if entry["key"] != key:
            return None
        r = entry["result"]
        return tuner.TuneResult(tuple(r["b"]), tuple(word), r["residual"], r["method"],
                                r["bracket_width"], r["best_effort"])
    except (OSError, ValueError, KeyError, TypeError) as e:
        log.warning("skipping corrupt cache entry %s: %s", path, e)
        return None


def cache_store(cache_dir, word, spec, result):
    path, key = _cache_path(cache_dir, word, spec)
    _atomic_write(path, json.dumps({"key": key, "result": result.to_dict()}, sort_keys=True))


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------- commands
def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _family(cfg):
    if not cfg.b:
        raise ConfigError("this command needs --b")
    return build_quadratic_family(list(cfg.b), cfg.precision_bits)


def _bF(cfg):
    """The configured map, or the doubling accumulation point when none is given."""
    bs = list(cfg.b) or [tuner.accumulation_parameter(12)[0]]
    return build_quadratic_family(bs, cfg.precision_bits), bs


def cmd_analyze(cfg):
    res = renormalize(_family(cfg), cfg.max_period)
    return {"p": res.p, "combinatorics": res.combinatorics.canonical,
            "periodic_interval": res.periodic.to_dict(),
            "primitive": comb.is_primitive(res.combinatorics)}, {}


def cmd_nest(cfg):
    F = extend(_family(cfg))
    return nst.principal_nest(F, cfg.depth, cfg.horizon).to_dict(), {}


def cmd_cascade(cfg):
    F = extend(_family(cfg))
    n = nst.principal_nest(F, cfg.depth, cfg.horizon)
    dec = nst.cascade_decomposition(F, n)
    files = {}
    longest = max(dec.cascades, key=lambda c: c.length, default=None)
    out = {"nest": n.to_dict(), "decomposition": dec.to_dict()}
    if longest is not None and longest.length >= 3:
        prof = nst.yoccoz_profile(n.levels[longest.start:longest.end + 1], cfg.eta)
        files["yoccoz.csv"] = prof.to_csv()
        out["yoccoz"] = {"cascade": [longest.start, longest.end], "sum": prof.total,
                         "within_band": prof.within_band, "eta": cfg.eta}
    return out, files


def cmd_tune(cfg):
    if not cfg.word:
        raise ConfigError("tune needs --word")
    word = parse_word(cfg.word)
    n_type = word[0].n_type
    spec = tuner.FamilySpec.unit(n_type, cfg.precision_bits)
    hit = cache_lookup(cfg.cache_dir, word, spec)
    res = hit or tuner.superstable_parameter(spec, word)
    if cfg.cache_dir and hit is None:
        cache_store(cfg.cache_dir, word, spec, res)
    return {"result": res.to_dict(), "itinerary": comb.product_word(word).itinerary()}, {}


def cmd_delta(cfg):
    rows, bs = tuner.feigenbaum_delta(tuner.FamilySpec.unit(1, cfg.precision_bits), cfg.n_max)
    table = _csv(["n", "b_n", "delta_n"],
                 [[n, repr(float(bs[n - 1])), repr(d)] for n, d in rows])
    return {"b": [float(x) for x in bs], "delta": [[n, d] for n, d in rows]}, {"delta.csv": table}


def cmd_alpha(cfg):
    f, bs = _bF(cfg)
    ratios = tuner.feigenbaum_alpha(f, cfg.depth, cfg.max_period or 2)
    return {"b": [float(x) for x in bs], "ratios": ratios}, {"alpha.csv": _csv(["n", "ratio"], list(enumerate(ratios, 1)))}


def cmd_tower(cfg):
    tower = renorm_tower(_family(cfg), cfg.depth, cfg.max_period)
    return {"depth": len(tower), "levels": [{"p": r.p, "combinatorics": r.combinatorics.canonical}
                                            for r in tower]}, {}


def cmd_contraction(cfg):
    f, bs = _bF(cfg)
    g = renormalize(f, cfg.max_period or 2).renormalized
    fit = tuner.contraction_rate(f, g, cfg.depth, cfg.max_period or 2)
    table = _csv(["k", "distance"], list(enumerate(fit.distances)))
    return {"b": [float(x) for x in bs], **fit.to_dict()}, {"contraction.csv": table}


def cmd_julia(cfg):
    P = cx.ComplexPolynomial.from_family(list(cfg.b) or [-2.0])
    grid = cx.RasterGrid.around(P, n=cfg.raster)
    r = cx.julia_raster(P, grid)
    return {"shape": list(r.shape), "bounded_pixels": int((r == cx.ESCAPED_NEVER).sum()),
            "escape_radius": grid.escape_radius}, {"julia.csv": cx.raster_csv(P, grid)}


def cmd_external(cfg):
    P = cx.ComplexPolynomial.from_family(list(cfg.b) or [-2.0])
    s = cx.external_map_samples(P, cfg.samples)
    return {"degree": s.degree, "winding": s.winding, "max_deviation": s.max_deviation(),
            "potential": s.potential}, {"external.csv": s.to_csv()}


def cmd_combinatorics(cfg):
    if cfg.word:
        word = parse_word(cfg.word)
        M = comb.product_word(word)
        facs = sorted([[x.canonical for x in fz] for fz in comb.factorizations(M)])
        return {"canonical": M.canonical, "itinerary": M.itinerary(),
                "primitive": comb.is_primitive(M), "factorizations": facs}, {}
    allc = list(comb.enumerate_combinatorics(cfg.n_type, cfg.m))
    return {"n_type": cfg.n_type, "m": cfg.m, "count": len(allc),
            "primitive": sum(comb.is_primitive(M) for M in allc)}, {}


HANDLERS = {name: globals()["cmd_" + name] for name in COMMANDS}


@dataclass(frozen=True)
class Report:
    command: str
    inputs: dict
    payload: dict | None
    provenance: dict
    error: dict | None = None

    def to_json(self) -> str:
        body = {"schema": SCHEMA, "command": self.command, "inputs": self.inputs,
                "payload": self.payload, "provenance": self.provenance}
        if self.error is not None:
            body["error"] = self.error
        return json.dumps(body, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if hasattr(x, "item"):
        return x.item()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _provenance(cfg):
    return {"version": __version__, "precision_bits": cfg.precision_bits, "horizon": cfg.horizon,
            "max_period": cfg.max_period, "eval_tol": 1e-9,
            "nest_same_tol": nst.SAME_TOL, "superstable_tol": nst.SUPERSTABLE_TOL,
            "ellipse_range": list(cx.ELLIPSE_RANGE), "ellipse_steps": cx.ELLIPSE_STEPS}


def run(command: str, cfg: RunConfig) -> int:
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command}")
    t0 = time.time()
    files = {}
    try:
        payload, files = HANDLERS[command](cfg)
        err, status = None, 0
    except (ParseError, ConfigError) as e:
        payload, err, status = None, {"kind": "input", "message": str(e)}, 2
    except RenormError as e:
        payload, err, status = None, {"kind": e.code, "message": str(e)}, 1
    rep = Report(command, cfg.echo(), payload, _provenance(cfg), err)
    os.makedirs(cfg.out, exist_ok=True)
    _atomic_write(os.path.join(cfg.out, f"{command}.json"), rep.to_json())
    for name, text in files.items():
        _atomic_write(os.path.join(cfg.out, name), text)
    meta = {"command": command, "started": t0, "seconds": time.time() - t0, "status": status}
    _atomic_write(os.path.join(cfg.out, f"{command}.meta.json"), json.dumps(meta, indent=2))
    if err is not None:
        print(f"error: {err['message']}", file=sys.stderr)
    return status


def build_parser():
    ap = argparse.ArgumentParser(prog="multirenorm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--b", help="comma separated parameters")
        p.add_argument("--word", help="canonical string(s) joined by '*', or M2^n")
        p.add_argument("--depth", type=int)
        p.add_argument("--max-period", type=int)
        p.add_argument("--precision-bits", type=int)
        p.add_argument("--out")
        p.add_argument("--cache-dir")
    return ap


def config_from_args(ns) -> RunConfig:
    values = load_config(ns.config) if ns.config else {}
    if ns.b is not None:
        values["b"] = _coerce("b", ns.b)
    for key in ("word", "depth", "max_period", "precision_bits", "out", "cache_dir"):
        v = getattr(ns, key)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run(ns.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
