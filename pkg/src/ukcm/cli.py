"""Command-line front end.

Every command resolves its settings in three layers: built-in defaults, the
command's section of an INI file given with ``--config``, then flags.  The
resolved settings are echoed as ``# key = value`` lines before any output,
and when ``--out`` is given they are also saved next to the output as
``<out>.ini``; feeding that file back with ``--config`` reproduces the run.

Exit codes: 0 success, 2 input error, 3 budget exhausted or result unknown,
4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4

PACK_KEYS = ("C1", "C2p", "C2", "C3", "C4p", "C4", "C5", "C6", "K")
INSTANCES = {"micro": "bottleneck_micro.ini", "degenerate": "bottleneck_degenerate.ini"}


class InputError(ValueError):
    """Bad flag, config value or input file."""


class InvariantError(RuntimeError):
    """A check that must hold for correct code failed."""


# ---------------------------------------------------------------------------
# Settings

_PACK_DEFAULTS = {f"pack_{k}": "" for k in PACK_KEYS} | {"pack_micro": "false"}

DEFAULTS = {
    "classify": {"family": "", "format": "text", "out": "", "budget_n_max": "3", "budget_window": "16",
                 "budget_placement": "4", "budget_shift": "4", "budget_candidates": "20000"},
    "sweep-tau0": {"family": "fig1g", "q": "0.25 0.2 0.15", "size": "128", "trials": "200",
                   "min_uncensored": "", "max_time": "1e7", "seed": "0", "method": "jump", "out": "",
                   "plot": "", "budget_max_trials": "", "workers": ""},
    "verify": {"instance": "", "family": "fig1e", "size": "4x4", "n": "0", "core": "region", "ell": "",
               "h": "", "mode": "Exact", "out": "", "budget_sites": "20"} | _PACK_DEFAULTS,
    "estimate": {"family": "fig1g", "event": "spanning", "shapes": "4x4", "direction": "u1", "q": "0.2 0.5",
                 "trials": "10000", "seed": "0", "mode": "Exact", "out": "", "hyp_class": "", "hyp_q": "0.1",
                 "hyp_alpha": ""} | _PACK_DEFAULTS,
    "closure": {"input": "", "family": "", "out": ""},
    "span-scan": {"input": "", "family": "fig1g", "q": "0.2", "size": "16", "seed": "0", "dmin": "",
                  "dmax": "", "out": ""} | _PACK_DEFAULTS,
}


class Settings:
    """Resolved string settings with typed accessors that raise InputError."""

    def __init__(self, command: str, values: dict):
        self.command, self.values = command, dict(values)

    def raw(self, key: str) -> str:
        return self.values[key].strip()

    def str(self, key: str) -> str:
        return self.raw(key)

    def int(self, key: str, lo: int | None = None) -> int:
        try:
            v = int(self.raw(key))
        except ValueError:
            raise InputError(f"{key}: expected an integer, got {self.raw(key)!r}") from None
        if lo is not None and v < lo:
            raise InputError(f"{key}: must be >= {lo}")
        return v

    def float(self, key: str) -> float:
        try:
            v = float(self.raw(key))
        except ValueError:
            raise InputError(f"{key}: expected a number, got {self.raw(key)!r}") from None
        if not math.isfinite(v):
            raise InputError(f"{key}: must be finite")
        return v

    def floats(self, key: str) -> list[float]:
        toks = self.raw(key).replace(",", " ").split()
        try:
            return [float(t) for t in toks]
        except ValueError:
            raise InputError(f"{key}: expected a list of numbers, got {self.raw(key)!r}") from None

    def bool(self, key: str) -> bool:
        v = self.raw(key).lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off", ""):
            return False
        raise InputError(f"{key}: expected true/false, got {v!r}")

    def echo(self) -> str:
        lines = [f"# ukcm {__version__} {self.command}"]
        lines += [f"# {k} = {self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines)

    def ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp[self.command] = {k: self.values[k] for k in sorted(self.values)}
        buf = io.StringIO()
        buf.write(f"# ukcm {__version__}\n")
        cp.write(buf)
        return buf.getvalue()


def read_config_section(path: str | Path, command: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise InputError(f"config {path}: {e}") from None
    return dict(cp[command]) if cp.has_section(command) else {}


def shipped_instance(name: str) -> Path:
    if name not in INSTANCES:
        raise InputError(f"unknown instance {name!r}; choose from {sorted(INSTANCES)}")
    return Path(str(resources.files("ukcm.corpus").joinpath(INSTANCES[name])))


def resolve(command: str, args: argparse.Namespace) -> Settings:
    values = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(args).items() if k in values and v is not None}
    layers = []
    if command == "verify":
        inst = flags.get("instance")
        if inst is None and args.config:
            inst = read_config_section(args.config, command).get("instance")
        if inst:
            layers.append(read_config_section(shipped_instance(inst), command))
    if args.config:
        layers.append(read_config_section(args.config, command))
    layers.append(flags)
    for layer in layers:
        for k, v in layer.items():
            if k not in values:
                raise InputError(f"unknown setting {k!r} for {command}")
            values[k] = str(v)
    return Settings(command, values)


# ---------------------------------------------------------------------------
# Shared parsing helpers

def _family(s: Settings, key: str = "family"):
    from .family import resolve_family
    spec = s.str(key)
    if not spec:
        raise InputError(f"{key} is required")
    try:
        return resolve_family(spec)
    except OSError as e:
        raise InputError(f"cannot read family file {spec}: {e}") from None


def _pack(s: Settings, family):
    from .geometry import ConstantPack
    over = {k: s.float(f"pack_{k}") for k in PACK_KEYS if s.raw(f"pack_{k}")}
    K = over.pop("K", None)
    micro = s.bool("pack_micro")
    try:
        if micro:
            if K is None:
                raise InputError("pack_micro needs an explicit pack_K")
            return ConstantPack.make_micro(family, K=K, **over)
        return ConstantPack.default(family, K=K, **over)
    except ValueError as e:
        raise InputError(f"constant pack: {e}") from None


def _size(text: str) -> tuple[int, int]:
    t = text.strip().lower()
    try:
        if "x" in t:
            w, h = t.split("x")
            w, h = int(w), int(h)
        else:
            w = h = int(t)
    except ValueError:
        raise InputError(f"bad size {text!r}; use N or WxH") from None
    if w < 1 or h < 1:
        raise InputError(f"bad size {text!r}")
    return w, h


def _shape(text: str):
    """``WxH`` (box at the origin) or ``x0,y0,x1,y1``."""
    from .bootstrap import region_box
    from .geometry import Parallelogram
    if "," in text:
        try:
            x0, y0, x1, y1 = (int(v) for v in text.split(","))
            return Parallelogram.box(x0, y0, x1, y1)
        except ValueError as e:
            raise InputError(f"bad shape {text!r}: {e}") from None
    return region_box(*_size(text))


def _direction(text: str, R):
    from .geometry import Direction
    t = text.strip()
    if t in ("u1", "u2"):
        return R.axes[0 if t == "u1" else 1]
    try:
        x, y = (int(v) for v in t.split(","))
        return Direction(x, y)
    except ValueError as e:
        raise InputError(f"bad direction {text!r}: {e}") from None


def _q_list(s: Settings, key: str = "q", open_interval: bool = False) -> list[float]:
    qs = s.floats(key)
    if not qs:
        raise InputError(f"{key}: empty grid")
    for q in qs:
        ok = 0 < q < 1 if open_interval else 0 <= q <= 1
        if not ok:
            raise InputError(f"{key}: {q} outside {'(0, 1)' if open_interval else '[0, 1]'}")
    return qs


def _open_out(path: str):
    if not path or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as e:
        raise InputError(f"cannot write {path}: {e}") from None


def _save_ini(s: Settings, out: str) -> None:
    if out and out != "-":
        Path(out + ".ini").write_text(s.ini(), encoding="utf-8")


# ---------------------------------------------------------------------------
# classify

def cmd_classify(s: Settings) -> int:
    from .family import CLASS_NAMES, BudgetError, DifficultyBudget, Finite, classify, hard_directions_text
    fam = _family(s)
    budget = DifficultyBudget(s.int("budget_n_max", 1), s.int("budget_window", 1), s.int("budget_placement", 1),
                              s.int("budget_shift", 1), s.int("budget_candidates", 1))
    try:
        budget.validate(fam.range)
    except ValueError as e:
        raise InputError(str(e)) from None
    print(s.echo())
    try:
        rep = classify(fam, budget)
    except BudgetError as e:
        print(f"unknown: {e}")
        return EXIT_BUDGET
    rec = rep.as_record() | {"family": fam.name, "version": __version__}
    if s.str("format") == "json":
        print(json.dumps(rec, sort_keys=True))
    else:
        print(rep.summary())
        if rep.refined:
            print(f"refined class: {rep.refined} ({CLASS_NAMES[rep.refined]})")
        print(f"stable set: {rep.stable}")
        for u, d in sorted(rep.difficulties.items()):
            line = f"  difficulty {u}: {d}"
            if isinstance(d, Finite) and d.certificate is not None:
                c = d.certificate
                line += f"  certificate Z={list(c.Z)} I=<{len(c.I)} sites, {c.I[0]}..{c.I[-1]}> w={c.w}"
            print(line)
        if rep.coarse == "critical":
            print(f"witness: {rep.witness}")
            print(f"hard directions: {hard_directions_text(rep)}")
            pairs = "; ".join(f"{a} and {b}" for a, b in rep.opposite_pairs)
            print(f"opposite pairs: {pairs or 'none'}")
    if s.str("out"):
        fh, close = _open_out(s.str("out"))
        fh.write(json.dumps(rec, sort_keys=True, indent=2) + "\n")
        if close:
            fh.close()
        _save_ini(s, s.str("out"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep-tau0

def _tau0_point(job):
    """One grid point; module-level so worker processes can run it."""
    from .bootstrap import centered_box
    from .family import resolve_family
    from .kcm.dynamics import SimParams, estimate_tau0
    fam_spec, q, size, trials, min_unc, max_trials, max_time, seed, method = job
    p = SimParams(resolve_family(fam_spec), q, centered_box(size), max_time=max_time, seed=seed,
                  trial_count=trials)
    e = estimate_tau0(p, method=method, min_uncensored=min_unc, max_trials=max_trials)
    return (e.log_center, e.ci, e.mean, e.median, e.censor_fraction, e.zero_fraction, e.n_uncensored,
            e.trials, e.usable, e.mean_is_lower_bound)


def _predicted_ln(q: float, alpha, exps) -> float:
    """ln of (1/q^alpha)^beta (ln 1/q)^gamma (ln ln 1/q)^delta; nan where undefined."""
    b, g, d = exps
    lq = math.log(1 / q)
    try:
        v = alpha * b * lq
        if g:
            v += g * math.log(lq)
        if d:
            v += d * math.log(math.log(lq))
        return v
    except ValueError:
        return float("nan")


def cmd_sweep_tau0(s: Settings) -> int:
    from .family import classify
    from .snapshot import PLOT_HEADER, TAU0_HEADER, write_rows
    fam = _family(s)
    qs = _q_list(s, open_interval=True)
    sizes = []
    for tok in s.raw("size").replace(",", " ").split():
        w, h = _size(tok)
        if w != h:
            raise InputError("sweep-tau0 uses square boxes; give N")
        sizes.append(w)
    if not sizes:
        raise InputError("size: empty list")
    trials = s.int("trials", 1)
    min_unc = s.int("min_uncensored", 0) if s.raw("min_uncensored") else trials
    max_trials = s.int("budget_max_trials", 1) if s.raw("budget_max_trials") else 100 * max(trials, min_unc)
    max_time = s.float("max_time")
    if max_time <= 0:
        raise InputError("max_time must be positive")
    seed = s.int("seed", 0)
    method = s.str("method")
    if method not in ("jump", "rings"):
        raise InputError("method must be jump or rings")
    workers = s.int("workers", 1) if s.raw("workers") else (os.cpu_count() or 1)
    print(s.echo())
    jobs = [(s.str("family"), q, n, trials, min_unc, max_trials, max_time, seed, method) for q in qs for n in sizes]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_tau0_point, jobs))
    else:
        results = [_tau0_point(j) for j in jobs]
    rows, plot = [], []
    rep = classify(fam)
    for (_, q, n, *_rest), r in zip(jobs, results):
        center, ci, mean, median, cf, zf, nunc, ntr, usable, lower = r
        flag = "all-censored" if not usable else ("mean-lower-bound" if lower else "")
        rows.append((q, n, center, ci[0], ci[1], mean, median, cf, zf, nunc, ntr, seed, flag))
        if rep.exponents:
            lnln = math.log(math.log(center)) if usable and center > 1 else float("nan")
            plot.append((q, n, math.log(1 / q), lnln, _predicted_ln(q, float(str(rep.alpha)), rep.exponents)))
    fh, close = _open_out(s.str("out"))
    write_rows(fh, TAU0_HEADER, rows)
    if close:
        fh.close()
    plot_path = s.str("plot") or (s.str("out") + ".plot.csv" if s.str("out") not in ("", "-") else "")
    if plot_path and plot:
        with open(plot_path, "w", encoding="utf-8", newline="") as ph:
            write_rows(ph, PLOT_HEADER, plot)
    _save_ini(s, s.str("out"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _core(text: str, R):
    from .geometry import Parallelogram
    t = text.strip().lower()
    if t == "region":
        return R
    if t == "none":
        return None
    try:
        x0, y0, x1, y1 = (int(v) for v in t.split(","))
    except ValueError:
        raise InputError(f"bad core {text!r}; use x0,y0,x1,y1, region or none") from None
    return Parallelogram.box(x0, y0, x1, y1)


def cmd_verify(s: Settings) -> int:
    from .bootstrap import region_box
    from .family import BudgetError
    from .kcm.legal import BottleneckInstance, Counterexample, is_legal_path, verify_bottleneck
    from .snapshot import PATH_HEADER, path_rows, write_rows
    fam = _family(s)
    w, h = _size(s.raw("size"))
    R = region_box(w, h)
    pack = _pack(s, fam)
    ell = Fraction(s.raw("ell")) if s.raw("ell") else Fraction(w)
    hh = Fraction(s.raw("h")) if s.raw("h") else Fraction(h)
    if ell <= 0 or hh <= 0:
        raise InputError("ell and h must be positive")
    mode = s.str("mode")
    if mode not in ("Exact", "AsIs", "GreedyThin"):
        raise InputError("mode must be Exact, AsIs or GreedyThin")
    inst = BottleneckInstance(fam, R, pack, s.int("n", 0), _core(s.raw("core"), R), ell, hh,
                              s.int("budget_sites", 1), s.str("instance") or "custom")
    if len(R.lattice_points()) > inst.site_budget:
        # refuse before printing anything
        raise BudgetError(f"region has {len(R.lattice_points())} sites, over the site budget {inst.site_budget}")
    print(s.echo())
    res = verify_bottleneck(inst, mode=mode)
    st = res.stats
    print(f"result: {'Counterexample' if isinstance(res, Counterexample) else 'Verified'}")
    print(f"sites: {st.sites}")
    print(f"G(R) states: {st.g_size}")
    print(f"n-good states examined: {st.good_states}")
    print(f"reachable states: {st.reachable}")
    print(f"frontier sizes: {' '.join(map(str, st.frontier_sizes))}")
    print(f"wall time: {st.wall_time:.3f} s")
    if isinstance(res, Counterexample):
        if not is_legal_path(res.path, R, fam):
            raise InvariantError("verifier returned a path that is not legal")
        print(f"path length: {len(res.path) - 1} flips")
        if s.str("out"):
            fh, close = _open_out(s.str("out"))
            write_rows(fh, PATH_HEADER, path_rows(res.path))
            if close:
                fh.close()
    _save_ini(s, s.str("out"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate

def cmd_estimate(s: Settings) -> int:
    from .bootstrap import BudgetExceeded
    from .family import BudgetError, classify
    from .kcm.estimators import estimate_crossing_probability, estimate_spanning_probability
    from .kcm.hypotheses import AutomaticBound, HypothesisError, check_prop_main_hypotheses, theorem_parameters
    from .snapshot import ESTIMATE_HEADER, estimate_row, write_rows
    fam = _family(s)
    pack = _pack(s, fam)
    event = s.str("event")
    if event not in ("spanning", "crossing"):
        raise InputError("event must be spanning or crossing")
    shapes = [(tok, _shape(tok)) for tok in s.raw("shapes").split()]
    if not shapes:
        raise InputError("shapes: give at least one shape (WxH or x0,y0,x1,y1)")
    qs = _q_list(s)
    trials, seed, mode = s.int("trials", 1), s.int("seed", 0), s.str("mode")
    if mode not in ("Exact", "AsIs", "GreedyThin"):
        raise InputError("mode must be Exact, AsIs or GreedyThin")
    label = s.str("hyp_class").strip("()").lower()
    print(s.echo())
    rows, over_budget = [], False
    for tok, D in shapes:
        for q in qs:
            param = f"shape={tok};q={q:g}" + (f";u={s.str('direction')}" if event == "crossing" else "")
            try:
                if event == "spanning":
                    est = estimate_spanning_probability(D, fam, q, trials, seed, pack)
                else:
                    est = estimate_crossing_probability(D, _direction(s.str("direction"), D), fam, q, trials,
                                                        seed, mode, pack)
            except (BudgetError, BudgetExceeded) as e:
                over_budget = True
                nan = float("nan")
                rows.append((param, nan, nan, nan, 0.0, trials, seed, f"budget exceeded: {e}"))
                continue
            rows.append(estimate_row(param, est))
    fh, close = _open_out(s.str("out"))
    write_rows(fh, ESTIMATE_HEADER, rows)
    if close:
        fh.close()
    if label:
        hq = s.float("hyp_q")
        alpha = s.int("hyp_alpha", 1) if s.raw("hyp_alpha") else int(str(classify(fam).alpha))
        try:
            params = theorem_parameters(label, hq, alpha, pack)
        except HypothesisError as e:
            raise InputError(str(e)) from None
        print(f"# hypothesis report: class {label}, q={hq:g}, alpha={alpha}")
        if isinstance(params, AutomaticBound):
            print(f"# class {label}: {params.note}; exponents {params.exponents}")
        else:
            print(f"# n = {params.n} (from {params.n_raw:.6g})")
            for k in ("ln_T", "ln_L", "ln_H", "ln_K", "ln_ell", "ln_h", "ln_rho", "ln_p_left", "ln_p_down",
                      "ln_p_loc"):
                print(f"# {k} = {getattr(params, k):.6g}")
            for line in check_prop_main_hypotheses(params).lines():
                print("# " + line)
    _save_ini(s, s.str("out"))
    return EXIT_BUDGET if over_budget else EXIT_OK


# ---------------------------------------------------------------------------
# closure and span-scan

def _snapshot_in(s: Settings):
    from .snapshot import SnapshotError, load
    path = s.str("input")
    if not path:
        raise InputError("input snapshot is required (--in)")
    try:
        return load(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None
    except SnapshotError as e:
        raise InputError(f"{path}: {e}") from None


def cmd_closure(s: Settings) -> int:
    from .bootstrap import closure
    from .snapshot import dumps
    cfg, name = _snapshot_in(s)
    if not s.str("family"):
        if name in ("", "-"):
            raise InputError("snapshot records no family; pass --family")
        s.values["family"] = name
    fam = _family(s)
    print(s.echo())
    out = closure(cfg, fam)
    if not (out.infected | ~cfg.infected).all():
        raise InvariantError("closure lost an infected site")
    fh, close = _open_out(s.str("out"))
    fh.write(dumps(out, s.str("family")))
    if close:
        fh.close()
    _save_ini(s, s.str("out"))
    return EXIT_OK


SPAN_HEADER = ("a", "b", "c", "d", "diameter")


def cmd_span_scan(s: Settings) -> int:
    from .bootstrap import centered_box, spanned_scan
    from .kcm.dynamics import sample_equilibrium
    from .snapshot import write_rows
    fam = _family(s)
    pack = _pack(s, fam)
    if s.str("input"):
        cfg, _ = _snapshot_in(s)
    else:
        q = _q_list(s)[0]
        w, h = _size(s.raw("size"))
        if w != h:
            raise InputError("random span-scan input uses square boxes; give N")
        cfg = sample_equilibrium(centered_box(w), q, s.int("seed", 0))
    lo, hi = pack.critical_range
    dmin = s.float("dmin") if s.raw("dmin") else lo
    dmax = s.float("dmax") if s.raw("dmax") else hi
    if not 0 < dmin <= dmax:
        raise InputError("need 0 < dmin <= dmax")
    print(s.echo())
    boxes = spanned_scan(cfg, fam, pack, dmin, dmax)
    rows = sorted(((str(P.a), str(P.b), str(P.c), str(P.d), P.diameter) for P in boxes))
    fh, close = _open_out(s.str("out"))
    write_rows(fh, SPAN_HEADER, rows)
    if close:
        fh.close()
    _save_ini(s, s.str("out"))
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "sweep-tau0": cmd_sweep_tau0, "verify": cmd_verify,
            "estimate": cmd_estimate, "closure": cmd_closure, "span-scan": cmd_span_scan}


# ---------------------------------------------------------------------------
# Argument parsing

FLAG_HELP = {
    "family": "corpus name (fig1a..fig1g) or path to a .fam file",
    "format": "text or json",
    "out": "output file (CSV, or JSON for classify); the settings are saved next to it as <out>.ini",
    "q": "space-separated list of infection densities",
    "size": "box size WxH",
    "trials": "independent trials per grid point",
    "min_uncensored": "keep adding trials until this many are uncensored",
    "max_time": "censoring horizon for each trial",
    "seed": "master seed; trial k uses the stream (seed, k)",
    "method": "jump (flips only) or rings (every clock ring)",
    "plot": "CSV for the ln ln tau_0 against ln(1/q) plot (default <out>.plot.csv)",
    "workers": "worker processes (default: CPU count)",
    "instance": "shipped instance: micro or degenerate",
    "n": "number of critical parallelograms allowed in an n-good configuration",
    "core": "x0,y0,x1,y1, region or none",
    "ell": "crossing strip width along u1 (default: region width)",
    "h": "crossing strip height along u2 (default: region height)",
    "mode": "crossing detector: Exact, AsIs or GreedyThin",
    "event": "spanning or crossing",
    "shapes": "space-separated shapes, each WxH or x0,y0,x1,y1",
    "direction": "u1, u2, or an integer vector x,y",
    "input": "snapshot file",
    "dmin": "smallest diameter reported (default K/C1)",
    "dmax": "largest diameter reported (default K)",
    "hyp_class": "refined class whose hypotheses are checked (a..g)",
    "hyp_q": "density at which the hypotheses are checked",
    "hyp_alpha": "difficulty alpha (default: from the family)",
    "pack_micro": "true to waive K >= C1^2 C2'",
}
COMMAND_HELP = {("sweep-tau0", "size"): "space-separated box sides N (N x N boxes)",
                ("span-scan", "size"): "random box, N or WxH (with --q and --seed)"}

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ukcm", description="U-bootstrap percolation and KCM toolkit.")
    p.add_argument("--version", action="version", version=f"ukcm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, keys):
        sp.add_argument("--config", help="INI file; the section named after the command is read")
        flag_names = {"input": "--in"}
        for k in keys:
            if k.startswith("pack_"):
                flag = "--pack-" + k[5:]
            elif k.startswith("budget_") or k.startswith("hyp_"):
                flag = "--" + k.replace("_", "-")
            else:
                flag = flag_names.get(k, "--" + k.replace("_", "-"))
            cmd = sp.prog.split()[-1]
            text = COMMAND_HELP.get((cmd, k)) or FLAG_HELP.get(k, "budget limit" if k.startswith("budget_") else
                                 "override this constant" if k.startswith("pack_") else "")
            dflt = DEFAULTS[cmd][k]
            if dflt:
                text = f"{text} [{dflt}]" if text else f"[{dflt}]"
            sp.add_argument(flag, dest=k, default=None, help=text or None)
        return sp

    helps = {
        "classify": "classify an update family",
        "sweep-tau0": "estimate tau_0 over a q grid and box sizes",
        "verify": "exhaustively verify a bottleneck instance",
        "estimate": "spanning or crossing probability estimates",
        "closure": "bootstrap closure of a snapshot file",
        "span-scan": "spanned parallelograms in a diameter window",
    }
    for name, keys in DEFAULTS.items():
        common(sub.add_parser(name, help=helps[name]), keys)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    from .family import BudgetError, FamilyParseError
    from .geometry import GeometryError
    try:
        settings = resolve(args.command, args)
        code = COMMANDS[args.command](settings)
        sys.stdout.flush()
        return code
    except (InputError, FamilyParseError, GeometryError) as e:
        print(f"ukcm: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetError as e:
        print(f"ukcm: budget: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantError as e:
        print(f"ukcm: internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as e:
        print(f"ukcm: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # anything else is a bug
        print(f"ukcm: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
