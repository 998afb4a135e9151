"""Batch front-end.

Usage::

    wavetrace [--config PATH] [--out DIR] [--threads N] [--seed N] COMMAND

Commands: orbits, spectrum, disc-trace, bem-trace, invariants, validate,
selftest.  The configuration is INI text with one section per module (see
the bundled ``data/disc.ini``).  Exit status: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .errors import ConfigError, WaveTraceError

COMMANDS = ("orbits", "spectrum", "disc-trace", "bem-trace", "invariants", "validate", "selftest")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def g17(x) -> str:
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def git_blob_hash(data: bytes) -> str:
    """Content hash in the form ``git hash-object`` prints."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def bundled_config_path(name: str = "disc") -> str:
    return str(resources.files("wavetrace") / "data" / f"{name}.ini")


# ---------------------------------------------------------------------------
# configuration

class JobConfig:
    """Parsed INI job description with typed accessors."""

    def __init__(self, text: str, path: Optional[str] = None):
        self.text = text
        self.path = path
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {str(exc).splitlines()[0]}") from None
        self.cp = cp
        self._validate()

    @classmethod
    def load(cls, path: str) -> "JobConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(fh.read(), path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None

    def get(self, section, key, default=None):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return default

    def num(self, section, key, default=None) -> Optional[float]:
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: {v!r} is not a number") from None

    def integer(self, section, key, default=None) -> Optional[int]:
        v = self.num(section, key)
        if v is None:
            return default
        if v != int(v):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(v)

    def nums(self, section, key, default=None) -> Optional[List[float]]:
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return [float(t) for t in v.replace(";", ",").split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"[{section}] {key}: {v!r} is not a number list") from None

    @property
    def command(self) -> Optional[str]:
        return self.get("job", "command")

    def curve_spec(self) -> Dict:
        if not self.cp.has_section("curve"):
            raise ConfigError("missing [curve] section")
        shape = self.get("curve", "shape")
        spec = {"shape": shape, "params": self.nums("curve", "params", [])}
        for key in ("fourier_cos", "fourier_sin", "f_plus", "f_minus"):
            if self.get("curve", key) is not None:
                spec[key] = self.nums("curve", key)
        if self.get("curve", "halfwidth") is not None:
            spec["halfwidth"] = self.num("curve", "halfwidth")
        return spec

    def k_values(self, section) -> List[float]:
        ks = self.nums(section, "k_list")
        if ks is not None:
            return ks
        lo, hi, step = self.num(section, "k_min"), self.num(section, "k_max"), self.num(section, "k_step")
        if None in (lo, hi, step):
            raise ConfigError(f"[{section}] needs k_list or k_min/k_max/k_step")
        n = int(round((hi - lo) / step))
        return [lo + i * step for i in range(n + 1)]

    def _validate(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.cp.has_section("tolerances"):
            for key in self.cp.options("tolerances"):
                if not self.num("tolerances", key) > 0:
                    raise ConfigError(f"tolerance {key} must be positive")
        for sec in self.cp.sections():
            if self.get(sec, "k_min") is not None and self.get(sec, "k_max") is not None:
                if not self.num(sec, "k_max") > self.num(sec, "k_min"):
                    raise ConfigError(f"[{sec}] k range must be increasing")
            ks = self.nums(sec, "k_list")
            if ks is not None and any(b <= a for a, b in zip(ks, ks[1:])):
                raise ConfigError(f"[{sec}] k_list must be increasing")
            for key in self.cp.options(sec):
                if key.endswith("_file"):
                    ref = self.get(sec, key)
                    base = os.path.dirname(self.path) if self.path else "."
                    if not os.path.exists(os.path.join(base, ref)):
                        raise ConfigError(f"[{sec}] {key}: {ref} does not exist")


# ---------------------------------------------------------------------------
# artifacts

class Artifacts:
    """Collects outputs; every file is written by temp file + rename."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.files: Dict[str, str] = {}
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name: str, text: str):
        data = text.encode("utf-8")
        path = os.path.join(self.out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.files[name] = git_blob_hash(data)

    def csv(self, name: str, header: List[str], rows: List[List]):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([g17(v) if isinstance(v, (float, np.floating)) else v for v in row])
        self.write(name, buf.getvalue())

    def json(self, name: str, obj):
        self.write(name, canonical_json(obj))


def _versions():
    import mpmath
    import scipy

    return {"wavetrace": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__,
            "python": ".".join(map(str, sys.version_info[:3]))}


# ---------------------------------------------------------------------------
# commands

def _curve(cfg: JobConfig):
    from .geometry import arclength_reparametrize

    tol = cfg.num("tolerances", "reparam", None)
    return arclength_reparametrize(cfg.curve_spec(), tol)


def _orbit_row(M, i, o):
    return [M, i, float(o.length), o.stability or "", float(o.det_h), float(o.det_i_minus_p) if o.det_i_minus_p is not None else "",
            float(o.elliptic_angle) if o.elliptic_angle is not None else "", ";".join(g17(v) for v in o.config)]


ORBIT_HEADER = ["M", "index", "length", "stability", "det_h", "det_i_minus_p", "elliptic_angle", "config"]


def cmd_orbits(cfg, art, pool, rng):
    from .billiards import find_periodic_orbits

    curve = _curve(cfg)
    Ms = [int(m) for m in cfg.nums("orbits", "M", [2, 3])]
    results = list(pool.map(lambda M: find_periodic_orbits(curve, M), Ms))
    rows = [_orbit_row(M, i, o) for M, orbs in zip(Ms, results) for i, o in enumerate(orbs)]
    art.csv("orbits.csv", ORBIT_HEADER, rows)


def cmd_spectrum(cfg, art, pool, rng):
    from .billiards import enumerate_length_spectrum

    curve = _curve(cfg)
    spec = enumerate_length_spectrum(curve, cfg.num("spectrum", "L_max", 8.0), cfg.integer("spectrum", "q_max", 8))
    rows = [[float(L), p, q, o.stability if o is not None else "gliding"] for L, (p, q), o in spec]
    art.csv("spectrum.csv", ["length", "p", "q", "stability"], rows)


def _window(cfg, section):
    from .trace import TraceWindow

    return TraceWindow(cfg.num(section, "L_center", 4.0), cfg.num(section, "epsilon", 0.45), cfg.num(section, "tau", 0.0),
                       cfg.get(section, "scaling", "logarithmic"))


def cmd_disc_trace(cfg, art, pool, rng):
    from .trace import scan_csv, spectral_trace_disc

    w = _window(cfg, "disc-trace")
    ks = cfg.k_values("disc-trace")
    lam = cfg.num("disc-trace", "lambda_max", 200.0)
    radius = cfg.num("disc-trace", "radius", 1.0)
    vals = list(pool.map(lambda k: spectral_trace_disc(w, k, lam, radius), ks))
    art.write("disc_trace.csv", scan_csv(list(zip(ks, vals)), w.L_center, w.tau, w.scaling))


def cmd_bem_trace(cfg, art, pool, rng):
    from .trace import bem_trace_term, fit_expansion, scan_csv

    curve = _curve(cfg)
    w = _window(cfg, "bem-trace")
    ks = cfg.k_values("bem-trace")
    M = cfg.integer("bem-trace", "M", 2)
    mode = cfg.get("bem-trace", "mode", "full")
    verts = cfg.nums("bem-trace", "vertices")
    if verts is not None:
        verts = [v * curve.total_length for v in verts]  # given as fractions of the perimeter
    kw = {"mode": mode, "vertices": verts, "patch_halfwidth": cfg.num("bem-trace", "patch_halfwidth", 1.0)}
    vals = list(pool.map(lambda k: bem_trace_term(curve, w, k, M, **kw), ks))
    L = cfg.num("bem-trace", "L", w.L_center)
    art.write("bem_trace.csv", scan_csv(list(zip(ks, vals)), L, w.tau, w.scaling))
    J = cfg.integer("bem-trace", "J")
    if J:
        fit = fit_expansion(list(zip(ks, vals)), L, w.tau, J, scaling=w.scaling)
        art.json("bem_fit.json", fit.to_json())


def cmd_invariants(cfg, art, pool, rng):
    from .billiards import find_periodic_orbits
    from .waveinv import wave_invariants

    curve = _curve(cfg)
    M = cfg.integer("invariants", "M", 2)
    idx = cfg.integer("invariants", "orbit_index", 0)
    seeds = cfg.nums("invariants", "seeds")
    if seeds is not None:
        seeds = [[s * curve.total_length for s in seeds]]
    orbs = find_periodic_orbits(curve, M, seeds=seeds)
    if not 0 <= idx < len(orbs):
        raise ConfigError(f"orbit_index {idx} out of range (found {len(orbs)})")
    orb = orbs[idx]
    r = cfg.integer("invariants", "r", 1)
    J = cfg.integer("invariants", "J", 3)
    table = wave_invariants(curve, orb, r, J, tau=cfg.num("invariants", "tau", 0.0))
    beta = table.normalized()
    rows = [[j, complex(b).real, complex(b).imag, complex(beta[j]).real, complex(beta[j]).imag] for j, b in table.entries]
    art.csv("invariants.csv", ["j", "B_re", "B_im", "beta_re", "beta_im"], rows)
    art.json("invariants.json", table.to_json())


# ---------------------------------------------------------------------------
# validation suite

def _check(name, ok, value, tol):
    return {"name": name, "passed": bool(ok), "value": float(value), "tolerance": float(tol)}


def validation_suite(cfg: JobConfig, rng: np.random.Generator) -> List[Dict]:
    """Fast property checks on the configured disc; each returns a pass/fail record."""
    from scipy import special

    from .billiards import find_periodic_orbit, rotation_seed
    from .geometry import circle
    from .jets import Poly
    from .layers import assemble, disc_eigenvalue, disc_eigenvalue_quadrature
    from .specfun import SWITCH_RADIUS, bessel_zero, hankel1_asymptotic, hankel1_series
    from .trace import TraceWindow, spectral_trace_disc
    from .waveinv import OscillatoryIntegralJet, hankel_cutoff_transform, stationary_phase

    radius = cfg.num("curve", "params", None) or 1.0
    n_random = cfg.integer("validate", "n_random", 8)
    out = []

    worst = 0.0
    for _ in range(n_random):
        n = int(rng.integers(0, 51))
        x = float(rng.uniform(0.5, 100.0))
        w = special.jv(n, x) * special.yvp(n, x) - special.jvp(n, x) * special.yv(n, x)
        worst = max(worst, abs(w - 2 / (np.pi * x)) / (2 / (np.pi * x)))
    out.append(_check("wronskian", worst < 1e-9, worst, 1e-9))

    worst = 0.0
    for nu in (0, 1):
        for ph in np.linspace(0.1, 3.0, 5):
            z = SWITCH_RADIUS * np.exp(1j * ph)
            a, b = hankel1_series(nu, z), hankel1_asymptotic(nu, z)
            worst = max(worst, abs(a - b) / abs(a))
    out.append(_check("hankel_switch_continuity", worst < 1e-9, worst, 1e-9))

    worst = 0.0
    for _ in range(n_random):
        n, m = int(rng.integers(0, 30)), int(rng.integers(1, 10))
        worst = max(worst, abs(special.jv(n, bessel_zero(n, m))))
    out.append(_check("bessel_zero_residual", worst < 1e-9, worst, 1e-9))

    c = circle(radius)
    worst = 0.0
    for p, q in ((1, 3), (1, 4), (2, 5)):
        o = find_periodic_orbit(c, q, seeds=[rotation_seed(c, q, p)])
        worst = max(worst, abs(o.length - 2 * q * radius * math.sin(math.pi * p / q)))
    out.append(_check("circle_orbit_lengths", worst < 1e-9, worst, 1e-9))
    dia = find_periodic_orbit(c, 2, seeds=[rotation_seed(c, 2, 1)])
    out.append(_check("diameter_degenerate", abs(dia.det_h) < 1e-10, abs(dia.det_h), 1e-10))

    kap = complex(15.0, 0.5) / radius
    n_nodes = 256
    N = assemble(c, kap, n_nodes).matrix
    th = 2 * np.pi * np.arange(n_nodes) / n_nodes
    worst = 0.0
    for m in range(-20, 21):
        v = np.exp(1j * m * th)
        lam = disc_eigenvalue(m, kap, radius)
        worst = max(worst, np.linalg.norm(N @ v - lam * v) / np.linalg.norm(v))
    out.append(_check("disc_operator_eigenvectors", worst < 1e-7, worst, 1e-7))
    m = int(rng.integers(0, 21))
    err = abs(disc_eigenvalue(m, kap, radius) - disc_eigenvalue_quadrature(m, kap, radius))
    out.append(_check("disc_eigenvalue_oracle", err < 1e-6, err, 1e-6))

    # Fresnel: int exp(ik x^2/2) dx is exact at leading order
    jet = OscillatoryIntegralJet(1, Poly(1, 8, {(2,): 0.5}), [Poly.const(1, 8, 1.0)], 1, 0.0)
    k = 37.0
    sp = stationary_phase(jet, k, 2)
    exact = math.sqrt(2 * math.pi / k) * np.exp(1j * math.pi / 4)
    err = abs(sp.value - exact)
    out.append(_check("fresnel_exact", err < 1e-13, err, 1e-13))

    res = hankel_cutoff_transform(0.25, 1.5 + 0.02j, 1e3, 0.75)
    out.append(_check("hankel_transform_flat", res.residual < 1e-5, res.residual, 1e-5))

    w4 = TraceWindow(4.0 * radius, 0.45)
    w35 = TraceWindow(3.5 * radius, 0.45)
    kq = cfg.num("validate", "k", 40.0)
    lam = cfg.num("validate", "lambda_max", 80.0)
    peak = abs(spectral_trace_disc(w4, kq, lam, radius))
    ctrl = abs(spectral_trace_disc(w35, kq, lam, radius))
    out.append(_check("poisson_peak_contrast", peak > 10 * ctrl, peak / max(ctrl, 1e-300), 10.0))
    return out


def cmd_validate(cfg, art, pool, rng):
    checks = validation_suite(cfg, rng)
    report = {"checks": checks, "passed": all(c["passed"] for c in checks)}
    art.json("validate_report.json", report)
    if not report["passed"]:
        failed = [c["name"] for c in checks if not c["passed"]]
        raise ValidationFailed("failed checks: " + ", ".join(failed))


class ValidationFailed(WaveTraceError):
    pass


def selftest_table() -> str:
    """Fixed function-value table (CSV) for regression diffing."""
    from .specfun import selftest_table as rows

    lines = ["kind,index,arg_re,arg_im,value_re,value_im,rel_diff"]
    for row in rows():
        if "nu" in row:
            lines.append(",".join(["H", str(row["nu"]), g17(row["z"][0]), g17(row["z"][1]), g17(row["scipy"][0]), g17(row["scipy"][1]), g17(row["rel_diff"])]))
        else:
            lines.append(",".join(["j", f"{row['n']}:{row['m']}", "", "", g17(row["zero"]), "0", ""]))
    return "\n".join(lines) + "\n"


HANDLERS = {
    "orbits": cmd_orbits,
    "spectrum": cmd_spectrum,
    "disc-trace": cmd_disc_trace,
    "bem-trace": cmd_bem_trace,
    "invariants": cmd_invariants,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavetrace", description="Wave-trace invariant toolkit for smooth plane billiards.")
    p.add_argument("command", nargs="?", help="one of: " + ", ".join(COMMANDS) + " (default: [job] command in the config)")
    p.add_argument("--config", metavar="PATH", help="INI job file (validate defaults to the bundled disc config)")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker pool size (default: cores)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized test points in validate")
    return p


def _fail(msg: str) -> int:
    print(f"wavetrace: error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is not None and args.command not in COMMANDS:
        return _fail(f"unknown command {args.command!r}")
    if args.command == "selftest":
        sys.stdout.write(selftest_table())
        return EXIT_OK
    if args.threads < 1:
        return _fail("--threads must be >= 1")
    try:
        path = args.config or (bundled_config_path("disc") if args.command == "validate" else None)
        if path is None:
            raise ConfigError("--config is required for this command")
        cfg = JobConfig.load(path)
        command = args.command or cfg.command
        if command is None:
            raise ConfigError("no command given")
        if command == "selftest":
            sys.stdout.write(selftest_table())
            return EXIT_OK
        if command not in HANDLERS:
            raise ConfigError(f"unknown command {command!r}")
    except ConfigError as exc:
        return _fail(str(exc))

    art = Artifacts(args.out)
    manifest = {
        "command": command,
        "config": {"path": os.path.abspath(path), "hash": git_blob_hash(cfg.text.encode("utf-8"))},
        "seed": args.seed,
        "versions": _versions(),
    }
    status = EXIT_OK
    rng = np.random.default_rng(args.seed)
    try:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            HANDLERS[command](cfg, art, pool, rng)
        manifest["status"] = "ok"
    except ConfigError as exc:
        manifest.update(status="config_error", error={"name": type(exc).__name__, "message": str(exc)})
        print(f"wavetrace: error: {exc}", file=sys.stderr)
        status = EXIT_CONFIG
    except (WaveTraceError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        manifest.update(status="numerical_failure", error={"name": type(exc).__name__, "message": str(exc)})
        print(f"wavetrace: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_NUMERIC
    manifest["outputs"] = {name: {"hash": h} for name, h in sorted(art.files.items())}
    art.write("manifest.json", canonical_json(manifest))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
