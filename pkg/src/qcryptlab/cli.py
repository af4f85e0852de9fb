"""Seeded experiment runner.

    qcryptlab --experiment clone-fidelity --family universal --M 1 --N 2
    qcryptlab coinflip-bias --protocol aharonov --model I --phi pi/8 --check

Every run writes ``<out>/<experiment>.csv`` (plus any plot data) and prints a
summary table.  Parameters come from an optional flat ``key=value`` file and
are overridden by flags.  Exit codes: 0 ok, 2 configuration error, 3 a target
missed under ``--check``, 4 output directory not writable.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import math
import operator
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_MISS, EXIT_OUTPUT = 0, 2, 3, 4

PROVENANCE = ("paper-analytic", "simulated", "monte-carlo")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ value parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_number(text: str) -> float:
    """Numbers and small arithmetic such as ``pi/8`` or ``1/sqrt(2)``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"cannot read {text!r} as a number")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except SyntaxError as exc:
        raise ConfigError(f"cannot read {text!r} as a number") from exc


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key.replace("_", "-")] = val
    return out


# --------------------------------------------------------------- experiments


@dataclass
class Row:
    quantity: str
    value: float
    target: float | None
    tolerance: float | None
    provenance: str
    note: str = ""
    lower_is_ok: bool = False  # target acts as an upper bound
    at_least: bool = False  # target acts as a lower bound

    def ok(self) -> bool | None:
        if self.target is None:
            return None
        if self.at_least:
            return self.value >= self.target - (self.tolerance or 0.0)
        if self.lower_is_ok:
            return self.value <= self.target + (self.tolerance or 0.0)
        return abs(self.value - self.target) <= (self.tolerance or 0.0)


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    trials: int | None = None


@dataclass
class Outcome:
    rows: list
    extra_files: dict = field(default_factory=dict)  # name -> text


class Params:
    """Typed access to raw string parameters; records which keys were used."""

    def __init__(self, raw: dict, allowed: dict):
        unknown = sorted(set(raw) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")
        self.raw = {**allowed, **raw}

    def num(self, key) -> float:
        return parse_number(str(self.raw[key]))

    def int(self, key) -> int:
        v = self.num(key)
        if v != int(v):
            raise ConfigError(f"{key} must be an integer, got {self.raw[key]!r}")
        return int(v)

    def str(self, key, choices=None) -> str:
        v = str(self.raw[key])
        if choices is not None and v not in choices:
            raise ConfigError(f"{key} must be one of {', '.join(choices)}; got {v!r}")
        return v


def _clone_fidelity(cfg: ExperimentConfig) -> Outcome:
    from . import cloning, qsim

    p = Params(cfg.params, {"family": "universal", "M": "1", "N": "2", "s": "1/2", "figure": "local"})
    family = p.str("family", ("universal", "phase-covariant", "fixed-overlap"))
    M, N, figure = p.int("M"), p.int("N"), p.str("figure", cloning.FIGURES)
    s = p.num("s") if family == "fixed-overlap" else None
    try:
        spec = cloning.CloneSpec(family, M, N, figure, s=s)
        value = cloning.optimal_fidelity(spec)
    except (ValueError, NotImplementedError) as exc:
        raise ConfigError(str(exc)) from exc
    targets = {
        ("universal", "local"): (M * N + M + N) / (N * (M + 2)),
        ("phase-covariant", "local"): 0.5 * (1 + math.sqrt(0.5)) if N == 2 else None,
    }
    known = {0.5: 0.987, math.cos(math.pi / 9): 0.997}
    target, tol = targets.get((family, figure)), 1e-12
    if family == "fixed-overlap" and figure == "local":
        for sv, tv in known.items():
            if abs(s - sv) < 1e-12:
                target, tol = tv, 1e-3
    rows = [Row(f"{family} {M}->{N} {figure} fidelity", value, target, tol if target is not None else None,
                "paper-analytic")]
    if family == "phase-covariant" and M == 1 and N == 2 and figure == "local":
        circ = cloning.phase_cov_ideal_circuit()
        fids = []
        for k in range(64):
            psi = qsim.equatorial_state(2 * math.pi * k / 64)
            out = cloning.run_clone_circuit(circ, [psi], [0], cloning.PHASE_COV_CLONE_WIRES, (0,))
            fids.append([qsim.fidelity(c, psi) for c in out.clones])
        fids = np.array(fids)
        rows.append(Row("ideal circuit mean local fidelity (64 states)", float(fids.mean()), value, 1e-4, "simulated"))
        rows.append(Row("ideal circuit clone asymmetry", float(abs(fids[:, 0] - fids[:, 1]).max()), 1e-8, 0.0,
                        "simulated", lower_is_ok=True))
    if family == "fixed-overlap" and M == 1 and N == 2 and figure == "local":
        a, b = cloning.fixed_overlap_states(s)
        cloner = cloning.fixed_overlap_cloner(a, b)
        f = np.mean([qsim.fidelity(c, psi) for psi in (a, b) for c in cloner(psi).clones])
        rows.append(Row("explicit cloner mean local fidelity", float(f), value, 1e-9, "simulated"))
    return Outcome(rows)


def _qe_attack(cfg: ExperimentConfig) -> Outcome:
    from . import emulation

    p = Params(cfg.params, {"alpha": "1/sqrt(2)", "dim": "2", "instances": "200"})
    alpha, dim = p.num("alpha"), p.int("dim")
    instances = cfg.trials or p.int("instances")
    if not 0 <= alpha <= 1:
        raise ConfigError("alpha must lie in [0, 1]")
    res = emulation.one_block_attack(alpha, dim, seed=cfg.seed)
    rows = [
        Row("one-block bound", res["bound"], None, None, "paper-analytic"),
        Row("one-block emulated fidelity", res["simulated_fidelity"], 1.0 if abs(alpha - math.sqrt(0.5)) < 1e-12 else None,
            1e-9 if abs(alpha - math.sqrt(0.5)) < 1e-12 else None, "simulated"),
    ]
    rng = np.random.default_rng(cfg.seed)
    violations, worst = 0, math.inf
    for _ in range(instances):
        a = float(rng.uniform(0.05, 1.0))
        r = emulation.one_block_attack(a, dim, seed=int(rng.integers(2**31)))
        margin = r["simulated_fidelity"] - r["bound"]
        worst = min(worst, margin)
        violations += margin < -1e-9
    rows.append(Row(f"bound violations over {instances} instances", violations, 0, 0, "simulated"))
    rows.append(Row("smallest fidelity-minus-bound margin", worst, 0.0, 1e-9, "simulated", at_least=True))
    grid = np.linspace(0, 1 / math.sqrt(2), 201)
    probs = [emulation.three_state_forgery_prob(g) for g in grid]
    k = int(np.argmax(probs))
    rows.append(Row("three-state forgery maximum", probs[k], None, None, "paper-analytic", note=f"gamma={grid[k]:.4f}"))
    curve = "gamma,probability\n" + "".join(f"{g:.6f},{q:.10g}\n" for g, q in zip(grid, probs))
    return Outcome(rows, {"qe-attack-forgery-curve.csv": curve})


def _family_from(p: Params):
    from . import varqlone

    fam = p.str("family", ("phase-covariant", "fixed-overlap", "four-state"))
    if fam == "phase-covariant":
        return varqlone.StateFamily(fam)
    return varqlone.StateFamily(fam, p.num("phi"))


def _varqlone_train(cfg: ExperimentConfig) -> Outcome:
    from . import cloning, varqlone

    p = Params(cfg.params, {"family": "phase-covariant", "phi": "pi/18", "cost": "local", "iters": "200",
                            "lr": "0.05", "optimizer": "adam", "restarts": "5", "ansatz": "ideal",
                            "seq-len": "20", "sweeps": "20", "clones": "2", "connectivity": "fully-connected"})
    family = _family_from(p)
    kind = p.str("cost", varqlone.COST_KINDS)
    ansatz = p.str("ansatz", ("ideal", "search"))
    restarts = cfg.trials or p.int("restarts")
    n_clones = p.int("clones")
    cfgt = dict(lr=p.num("lr"), iters=p.int("iters"), optimizer=p.str("optimizer", ("gd", "adam")))
    best, traces, means = None, [], []
    if ansatz == "ideal":
        if family.kind != "phase-covariant":
            raise ConfigError("the ideal ansatz is the phase-covariant circuit; use ansatz=search")
        base = varqlone.ideal_phase_cov_structure()
        for r in range(restarts):
            res = varqlone.train(base, family, kind, varqlone.TrainConfig(seed=cfg.seed + r, randomize=True, **cfgt))
            traces.append(res.trace)
            means.append(varqlone.fidelity_summary(res.circuit, family)["mean"])
            if best is None or res.cost < best.cost:
                best = res
        best_circ = best.circuit
    else:
        width = n_clones + 1
        if family.kind == "phase-covariant":
            pool = varqlone.GatePool.phase_covariant() if n_clones == 2 else None
        elif family.kind == "fixed-overlap":
            pool = varqlone.GatePool.mayers() if n_clones == 2 else None
        else:
            pool = varqlone.GatePool.coinflip(width, p.str("connectivity", ("nearest-neighbor", "fully-connected")))
        if pool is None:
            raise ConfigError("pool-based search supports 1->2 for this family")
        found = varqlone.structure_search(pool, p.int("seq-len"), restarts, family, kind, seed=cfg.seed,
                                          sweeps=p.int("sweeps"), train_iters=cfgt["iters"],
                                          clone_wires=tuple(range(n_clones)), lr=cfgt["lr"])
        best_circ = found.best
        means.append(varqlone.fidelity_summary(best_circ, family)["mean"])
    summary = varqlone.fidelity_summary(best_circ, family)
    target = {"phase-covariant": 0.84, "fixed-overlap": 0.98, "four-state": 0.78}[family.kind]
    rows = [
        Row("best mean clone fidelity", summary["mean"], target, 0.0, "simulated", at_least=True),
        Row("mean over restarts of final fidelity", float(np.mean(means)), target, 0.0, "simulated", at_least=True),
        Row("clone asymmetry", summary["asymmetry"], None, None, "simulated"),
        Row("global fidelity", summary["global"], None, None, "simulated"),
    ]
    if family.kind == "phase-covariant" and n_clones == 2:
        rows.append(Row("optimal local fidelity", cloning.phase_covariant_local(2), None, None, "paper-analytic"))
    extra = {"varqlone-circuit.txt": varqlone.to_text(best_circ)}
    if traces:
        lines = ["restart,iteration,cost"] + [f"{r},{i},{c:.12g}" for r, tr in enumerate(traces) for i, c in enumerate(tr)]
        extra["varqlone-trace.csv"] = "\n".join(lines) + "\n"
    return Outcome(rows, extra)


def _bb84_dcrit(cfg: ExperimentConfig) -> Outcome:
    from . import attacks, varqlone

    p = Params(cfg.params, {"cloner": "ideal-circuit", "eta": "pi/4", "iters": "200"})
    which = p.str("cloner", ("ideal-circuit", "phase-cov-map", "varqlone", "forward"))
    if which == "ideal-circuit":
        handle = attacks.ideal_phase_cov_circuit_handle()
        target, tol, prov = 0.146, 0.003, "simulated"
    elif which == "phase-cov-map":
        handle = attacks.phase_cov_handle(p.num("eta"))
        target, tol, prov = (0.146, 0.003, "paper-analytic") if abs(p.num("eta") - math.pi / 4) < 1e-12 else (None, None, "paper-analytic")
    elif which == "forward":
        handle = attacks.forward_handle()
        target, tol, prov = 0.5, 1e-9, "simulated"
    else:
        fam = varqlone.StateFamily("phase-covariant")
        res = varqlone.train(varqlone.ideal_phase_cov_structure(), fam, "local",
                             varqlone.TrainConfig(seed=cfg.seed, randomize=True, iters=p.int("iters")))
        handle = varqlone.as_cloner_handle(res.circuit)
        target, tol, prov = 0.155, 0.015, "simulated"
    d = attacks.bb84_dcrit(handle)
    rows = [Row("Holevo quantity chi", d["chi"], None, None, prov),
            Row("critical error rate D_crit", d["d_crit"], target, tol, prov)]
    return Outcome(rows)


def _coinflip_bias(cfg: ExperimentConfig) -> Outcome:
    from . import attacks

    p = Params(cfg.params, {"protocol": "aharonov", "model": "I", "phi": "pi/8", "trials": "100000"})
    proto = p.str("protocol", ("aharonov", "mayers"))
    rows = []
    if proto == "aharonov":
        model = p.str("model", ("I", "II-4state", "II-2state"))
        phi = p.num("phi")
        if model == "I":
            rep = attacks.aharonov_attack_one(phi)
            target = 0.5 + math.sqrt(2) / 4 if abs(phi - math.pi / 8) < 1e-12 else None
            rows.append(Row("attack I guess probability", rep.guess_prob, target, 0.002 if target else None, "paper-analytic"))
            rows.append(Row("attack I bias", rep.bias, target - 0.5 if target else None, 0.002 if target else None,
                            "paper-analytic"))
        elif model == "II-4state":
            rep = attacks.aharonov_attack_two_four_state(phi)
            rows.append(Row("attack II (four-state) bias", rep.bias, 0.25, 1e-12, "paper-analytic"))
        else:
            lo, hi = attacks.aharonov_two_state_bounds(phi)
            at8 = abs(phi - math.pi / 8) < 1e-12
            rows.append(Row("attack II (two-state) lower bound", lo, 0.619 if at8 else None, 0.002 if at8 else None,
                            "paper-analytic"))
            rows.append(Row("attack II (two-state) upper bound", hi, 0.823 if at8 else None, 0.002 if at8 else None,
                            "paper-analytic"))
    else:
        rep = attacks.mayers_bias()
        rows.append(Row("Mayers failure probability", rep.extras["p_fail"], 0.214, 0.005, "paper-analytic"))
        rows.append(Row("Mayers bias", rep.bias, 0.275, 0.005, "paper-analytic"))
        trials = cfg.trials or p.int("trials")
        mc = attacks.simulate_p1_round(seed=cfg.seed, trials=trials)
        sigma = mc.extras["sigma_guess"]
        rows.append(Row("Mayers guess probability (Monte Carlo)", mc.guess_prob, mc.extras["analytic_guess"],
                        3 * sigma, "monte-carlo"))
    return Outcome(rows)


def _puf_id(cfg: ExperimentConfig) -> Outcome:
    from . import puf

    p = Params(cfg.params, {"protocol": "lrv", "N": "auto", "M": "3", "kind": "swap", "adversary": "honest",
                            "dim": "8", "trials": "10000", "delta-er": "auto"})
    proto = p.str("protocol", ("hrv", "lrv"))
    trials = cfg.trials or p.int("trials")
    if p.raw["N"] == "auto":
        p.raw["N"] = "3" if proto == "hrv" else "64"
    N = p.int("N")
    rows = []
    if proto == "hrv":
        kind = p.str("kind", ("swap", "gswap"))
        adv = p.str("adversary", ("honest", "random-state", "span-emulation"))
        M, dim = p.int("M"), p.int("dim")
        device = puf.UqPUF.sample(dim, seed=cfg.seed)
        rep = puf.run_hrv(device, N, M, kind, adv, trials, seed=cfg.seed + 1)
        if adv == "honest":
            rows.append(Row("honest accept rate", rep.accept_rate, 1.0, 0.0, "monte-carlo"))
        elif adv == "random-state":
            bound = puf.hrv_soundness(N, M, 1 / dim, kind)
            rows.append(Row("soundness formula at E[F]=1/dim", bound, None, None, "paper-analytic"))
            rows.append(Row("random-state accept rate", rep.accept_rate, bound, 3 * rep.sigma, "monte-carlo",
                            lower_is_ok=True))
        else:
            rows.append(Row("span-emulation accept rate", rep.accept_rate, 0.99, 0.0, "monte-carlo", at_least=True))
    else:
        raw = p.str("delta-er")
        delta = None if raw == "auto" else parse_number(raw)
        res = puf.simulate_lrv(N, trials, delta, seed=cfg.seed)
        rows.append(Row("honest cVer accept rate", res["accept_rate"], res["bound"], 0.0, "monte-carlo", at_least=True))
        rows.append(Row("delta_er used", res["delta_er"], None, None, "paper-analytic"))
        if N <= 12 and N % 2 == 0:
            bf, _ = puf.brute_force_attack_prob(N, 0)
            rows.append(Row("best classical string (enumerated)", bf, puf.global_attack_prob(N, 0), 1e-12, "simulated"))
        rows.append(Row("generalised-trap average", puf.general_trap_average(N), puf.general_trap_asymptotic(N),
                        0.1 * puf.general_trap_asymptotic(N), "paper-analytic"))
    return Outcome(rows)


def _hpuf_bounds(cfg: ExperimentConfig) -> Outcome:
    from . import puf

    p = Params(cfg.params, {"m": "16", "q": "4", "p": "1/2", "p-classic": "0.99", "grid": "50"})
    m, q, pp, pc, grid = p.int("m"), p.int("q"), p.num("p"), p.num("p-classic"), p.int("grid")
    ps = np.linspace(0.5, 1.0, grid)
    worst = max(abs(puf.hpuf_guess_prob(x, clip=False) - puf.hpuf_helstrom_value(x)) for x in ps)
    rows = [
        Row("guess bound at p", puf.hpuf_guess_prob(pp), 0.5 * (1 + math.sqrt(0.5)) if pp == 0.5 else None,
            1e-9 if pp == 0.5 else None, "paper-analytic"),
        Row(f"max |bound - Helstrom| over {grid} p values", worst, 1e-9, 0.0, "simulated", lower_is_ok=True),
        Row("forgery bound", puf.hpuf_forgery_bound(pp, m, q, pc), 1e-6, 0.0, "paper-analytic", lower_is_ok=True),
    ]
    curve = "p,guess_bound,helstrom\n" + "".join(
        f"{x:.6f},{puf.hpuf_guess_prob(x, clip=False):.12g},{puf.hpuf_helstrom_value(x):.12g}\n" for x in ps)
    return Outcome(rows, {"hpuf-guess-curve.csv": curve})


EXPERIMENTS = {
    "clone-fidelity": _clone_fidelity,
    "qe-attack": _qe_attack,
    "varqlone-train": _varqlone_train,
    "bb84-dcrit": _bb84_dcrit,
    "coinflip-bias": _coinflip_bias,
    "puf-id": _puf_id,
    "hpuf-bounds": _hpuf_bounds,
}


# ------------------------------------------------------------------ output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def render_csv(cfg: ExperimentConfig, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "seed", "quantity", "value", "target", "tolerance", "provenance", "within_target", "note"])
    for r in rows:
        if r.provenance not in PROVENANCE:
            raise ValueError(f"bad provenance {r.provenance!r}")
        ok = r.ok()
        w.writerow([cfg.experiment, cfg.seed, r.quantity, _fmt(r.value), _fmt(r.target), _fmt(r.tolerance),
                    r.provenance, "" if ok is None else _fmt(ok), r.note])
    return buf.getvalue()


def render_summary(cfg: ExperimentConfig, rows) -> str:
    lines = [f"{cfg.experiment} (seed {cfg.seed})"]
    for r in rows:
        target = ""
        if r.target is not None:
            rel = ">=" if r.at_least else "<=" if r.lower_is_ok else "target"
            target = f"  [{rel} {_fmt(r.target)} tol {_fmt(r.tolerance)}: {'ok' if r.ok() else 'MISS'}]"
        note = f"  ({r.note})" if r.note else ""
        lines.append(f"  {r.quantity}: {_fmt(r.value)} <{r.provenance}>{target}{note}")
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> tuple[Outcome, dict]:
    """Run one experiment and write its files; returns the outcome and written paths."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    outcome = EXPERIMENTS[cfg.experiment](cfg)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"{out} is not writable")
        paths = {}
        main = out / f"{cfg.experiment}.csv"
        main.write_text(render_csv(cfg, outcome.rows))
        paths["csv"] = main
        for name, text in outcome.extra_files.items():
            path = out / name
            header = f"# seed={cfg.seed}\n"
            path.write_text(header + text)
            paths[name] = path
    except OSError as exc:
        raise PermissionError(str(exc)) from exc
    return outcome, paths


# -------------------------------------------------------------------- main


_VALUE_FLAGS = {"--experiment", "--seed", "--out", "--trials", "--config"}
_BARE_FLAGS = {"--check", "-h", "--help"}


def _split_argv(argv):
    """Separate the fixed flags (handed to argparse) from experiment parameters.

    Doing this by hand keeps a parameter value such as ``--M 1`` from being
    taken as the positional experiment id."""
    known, rest = [], []
    i = 0
    while i < len(argv):
        tok = argv[i]
        name = tok.split("=", 1)[0]
        if name in _VALUE_FLAGS:
            take = 1 if "=" in tok else 2
            known.extend(argv[i:i + take])
            i += take
        elif tok in _BARE_FLAGS:
            known.append(tok)
            i += 1
        elif tok.startswith("--"):
            take = 1 if "=" in tok else 2
            rest.extend(argv[i:i + take])
            i += take
        else:
            known.append(tok)
            i += 1
    return known, rest


def build_config(argv) -> tuple[ExperimentConfig, bool]:
    parser = argparse.ArgumentParser(prog="qcryptlab", description="Run a seeded qcryptlab experiment.",
                                     allow_abbrev=False)
    parser.add_argument("experiment_pos", nargs="?", metavar="EXPERIMENT", help="experiment id")
    parser.add_argument("--experiment", help="experiment id: " + ", ".join(EXPERIMENTS))
    parser.add_argument("--seed", type=int, help="random seed (default 0, echoed in every output)")
    parser.add_argument("--out", help="output directory (default ./results)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials / restarts / instances")
    parser.add_argument("--config", help="flat key=value parameter file")
    parser.add_argument("--check", action="store_true", help="exit 3 if any row misses its target")
    known, rest = _split_argv(list(argv))
    args = parser.parse_args(known)

    file_params = read_config_file(args.config) if args.config else {}
    experiment = args.experiment or args.experiment_pos or file_params.pop("experiment", None)
    file_params.pop("experiment", None)
    if not experiment:
        raise ConfigError("no experiment given (use --experiment)")
    params = dict(file_params)
    seed = args.seed if args.seed is not None else int(parse_number(params.pop("seed", "0")))
    out = args.out or params.pop("out", "results")
    trials = args.trials if args.trials is not None else (int(parse_number(params.pop("trials"))) if "trials" in params
                                                          and experiment != "coinflip-bias" and experiment != "puf-id"
                                                          else None)
    params.pop("seed", None)
    params.pop("out", None)
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"missing value for --{key}")
            val = rest[i + 1]
            i += 2
        params[key.replace("_", "-")] = val
    if trials is not None and trials < 1:
        raise ConfigError("--trials must be positive")
    return ExperimentConfig(experiment, params, seed, out, trials), args.check


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, check = build_config(argv)
        outcome, paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PermissionError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    sys.stdout.write(render_summary(cfg, outcome.rows))
    sys.stdout.write(f"wrote {', '.join(str(p) for p in paths.values())}\n")
    if check and any(r.ok() is False for r in outcome.rows):
        return EXIT_MISS
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
