"""Command-line driver: ``wordste verify | atomize | simulate``.

Exit codes: 0 pass, 1 fail, 2 antecedent failure, 3 unknown or solver
error, 4 usage or parse error.

The ``--json`` report of ``verify`` has a fixed schema (``schema`` field
``wordste-verify/1``); see the README for the field list.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import solver as smt
from .atomize import AtomizeError, atomize_design
from .ir.elaborate import elaborate
from .ir.parser import ParseError, parse_design, parse_spec
from .oracle import OracleError, TernaryWord, simulate_concrete, simulate_ternary
from .ste import SpecError, check, check_div_by_zero, elaborate_spec, replay, run_bmc, run_ste
from .symsim import SHIFT_MODES

EXIT_USAGE = 4
SCHEMA = "wordste-verify/1"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    design: Path
    spec: Path | None = None
    mode: str = "ste"
    frames: int | None = None
    antfail: str | None = None  # None: the spec's own mode line
    shift_mode: str = "strict-sound"
    solver: str | None = None
    timeout: float = 60.0
    dump_smt: Path | None = None
    json: bool = False
    params: tuple = ()

    def validate(self) -> None:
        if self.mode not in ("ste", "bmc"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.antfail not in (None, "report", "assume"):
            raise UsageError(f"unknown antecedent-failure policy {self.antfail!r}")
        if self.shift_mode not in SHIFT_MODES:
            raise UsageError(f"unknown shift mode {self.shift_mode!r}")
        if self.mode == "bmc" and self.shift_mode != "strict-sound":
            raise UsageError("--shift-mode only applies to ste mode")
        if self.mode == "bmc" and self.antfail is not None:
            raise UsageError("--antfail only applies to ste mode")
        if self.frames is not None and self.frames < 1:
            raise UsageError("--frames must be at least 1")
        if self.timeout <= 0:
            raise UsageError("--timeout must be positive")


def parse_params(items: Sequence[str]) -> dict[str, int]:
    out = {}
    for item in items:
        name, eq, value = item.partition("=")
        if not eq or not name:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = int(value, 0)
        except ValueError:
            raise UsageError(f"--param {name}: {value!r} is not an integer") from None
    return out


def _read(path: Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def load_design(path: Path, params: dict):
    """Parse and elaborate, consuming the overrides that name design params."""
    src = parse_design(_read(path), str(path), Path(path).stem)
    names = {p.name for p in src.params}
    mine = {k: v for k, v in params.items() if k in names}
    rest = {k: v for k, v in params.items() if k not in names}
    return elaborate(src, mine, str(path)), rest


# -- verify ---------------------------------------------------------------------


def cmd_verify(cfg: RunConfig, out=sys.stdout) -> int:
    cfg.validate()
    if cfg.spec is None:
        raise UsageError("verify needs a spec file")
    timings = {}
    t0 = time.perf_counter()
    d, rest = load_design(cfg.design, dict(cfg.params))
    spec = elaborate_spec(parse_spec(_read(cfg.spec), str(cfg.spec)), d, overrides=rest, source=str(cfg.spec))
    timings["parse"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    amap = atomize_design(d, spec)
    timings["atomize"] = time.perf_counter() - t0

    if cfg.mode == "ste":
        ob, _ = run_ste(d, spec, cfg.frames, amap, cfg.shift_mode)
    else:
        ob = run_bmc(d, spec, cfg.frames, amap)
    timings["simulate"] = ob.sim_time

    policy = cfg.antfail or spec.mode
    if cfg.dump_smt is not None:
        _dump(ob, cfg.dump_smt, policy)
    res = check(ob, policy if cfg.mode == "ste" else "assume", cfg.solver, cfg.timeout)
    timings["emit"] = res.emit_time
    timings["solve"] = res.solve_time

    rep = replay(d, ob, res) if res.verdict == "fail" else None
    divzero = None
    if cfg.mode == "ste" and ob.divisors and res.verdict != "unknown":
        ans = check_div_by_zero(ob, cfg.solver, cfg.timeout)
        divzero = ans.status
        if ans.status == "sat":
            res.warnings.append("a defined divisor can be zero; the division templates assume it cannot")

    report = {
        "schema": SCHEMA,
        "verdict": res.verdict,
        "exit_code": res.exit_code,
        "design": d.name,
        "mode": cfg.mode,
        "antfail_policy": policy if cfg.mode == "ste" else None,
        "shift_mode": cfg.shift_mode if cfg.mode == "ste" else None,
        "frames": ob.frames,
        "largest_atom": amap.largest(),
        "checks": len(ob.checks),
        "antfail_conditions": len(ob.ant_fail),
        "fresh_inputs": len(ob.fresh_inputs),
        "model": {k: _jsonable(v) for k, v in sorted(res.model.items())},
        "failed": [
            {"tuple": k.tuple_index, "word": k.word, "hi": k.hi, "lo": k.lo, "frame": k.frame} for k in res.failed
        ],
        "conflicts": [
            {"word": a.word, "hi": a.hi, "lo": a.lo, "frame": a.frame, "antecedents": list(a.tuples),
             "against": "circuit" if a.against_circuit else "antecedent"}
            for a in res.conflicts
        ],
        "replay": None if rep is None else {"confirmed": rep.confirmed, "lines": rep.lines, "flags": rep.flags},
        "div_by_zero": divzero,
        "warnings": res.warnings,
        "diagnostics": res.diagnostics,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    if cfg.json:
        json.dump(report, out, indent=2)
        out.write("\n")
    else:
        _human(report, out)
    return res.exit_code


def _jsonable(v):
    if isinstance(v, (bool, int)):
        return v
    if hasattr(v, "entries"):
        return {"default": v.default if isinstance(v.default, int) else _jsonable(v.default),
                "entries": {str(k): _jsonable(x) for k, x in sorted(v.entries.items())}}
    return str(v)


def _dump(ob, path: Path, policy: str) -> None:
    path = Path(path)
    path.write_text(ob.emit("negok").text)
    if ob.kind == "ste" and policy == "report" and ob.ant_fail:
        path.with_suffix(".antfail.smt2").write_text(ob.emit("antfail").text)


def _human(r: dict, out) -> None:
    w = out.write
    verdicts = {"pass": "PASS", "fail": "FAIL", "antfail": "ANTECEDENT FAILURE", "unknown": "UNKNOWN"}
    w(f"{r['design']}: {verdicts[r['verdict']]}  ({r['mode']}, {r['frames']} frames, "
      f"{r['checks']} checks, largest atom {r['largest_atom']})\n")
    if r["model"]:
        w("counterexample:\n")
        for k, v in r["model"].items():
            w(f"  {k} = {v}\n")
    for f in r["failed"]:
        w(f"  violated: cons#{f['tuple']} {f['word']}[{f['hi']}:{f['lo']}] at frame {f['frame']}\n")
    for c in r["conflicts"]:
        ants = ",".join(f"ant#{i}" for i in c["antecedents"])
        w(f"  conflict: {c['word']}[{c['hi']}:{c['lo']}] at frame {c['frame']}: {ants} vs {c['against']}\n")
    if r["replay"] is not None:
        status = "confirmed" if r["replay"]["confirmed"] else "NOT confirmed"
        w(f"replay on the concrete simulator: {status}\n")
        for line in r["replay"]["lines"] + r["replay"]["flags"]:
            w(f"  {line}\n")
    for msg in r["warnings"]:
        w(f"warning: {msg}\n")
    if r["diagnostics"]:
        w(f"solver: {r['diagnostics']}\n")
    w("times: " + "  ".join(f"{k} {v:.3f}s" for k, v in r["timings"].items()) + "\n")


# -- atomize --------------------------------------------------------------------


def cmd_atomize(design: Path, spec: Path | None, params: dict, out=sys.stdout, as_json: bool = False) -> int:
    d, rest = load_design(design, params)
    sp = None
    if spec is not None:
        sp = elaborate_spec(parse_spec(_read(spec), str(spec)), d, overrides=rest, source=str(spec))
    elif rest:
        raise UsageError(f"unknown parameter(s): {', '.join(sorted(rest))}")
    amap = atomize_design(d, sp)
    if as_json:
        json.dump({"atoms": {w: [list(a) for a in at.atoms] for w, at in amap.items()},
                   "largest": amap.largest()}, out, indent=2)
        out.write("\n")
    else:
        out.write(amap.table() + "\n")
        out.write(f"largest atom: {amap.largest()}\n")
    return 0


# -- simulate -------------------------------------------------------------------

_VALUE = re.compile(r"^(?:0b([01xX_]+)|0x([0-9a-fA-F_]+)|(\d+)|([xX]))$")


def parse_stimulus(text: str, d) -> list[dict]:
    """One frame per line of ``name=value`` pairs.

    Values are decimal, ``0x`` hex, ``0b`` binary (``x`` digits allowed) or
    ``X`` for all bits unknown.  ``#`` starts a comment.
    """
    frames = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        frame = {}
        for pair in line.replace(",", " ").split():
            name, eq, value = pair.partition("=")
            if not eq or name not in d.words or d.words[name].kind != "input":
                raise UsageError(f"stimulus line {n}: bad assignment {pair!r}")
            width = d.words[name].width
            m = _VALUE.match(value)
            if m is None:
                raise UsageError(f"stimulus line {n}: bad value {value!r} for {name}")
            if m.group(1):
                bits = m.group(1).replace("_", "")
                if len(bits) > width:
                    raise UsageError(f"stimulus line {n}: {value!r} is wider than {name} ({width} bits)")
                tw = TernaryWord.parse(bits.rjust(width, "0"))
            elif m.group(4):
                tw = TernaryWord.all_x(width)
            else:
                v = int(m.group(2).replace("_", ""), 16) if m.group(2) else int(m.group(3))
                if v >> width:
                    raise UsageError(f"stimulus line {n}: {value} does not fit in {name} ({width} bits)")
                tw = TernaryWord(width, v)
            frame[name] = tw
        missing = [w.name for w in d.inputs if w.name not in frame]
        if missing:
            raise UsageError(f"stimulus line {n}: no value for {', '.join(missing)}")
        frames.append(frame)
    return frames


def cmd_simulate(design: Path, stimulus: Path, frames: int | None, params: dict, budget: int = 12,
                 out=sys.stdout) -> int:
    d, rest = load_design(design, params)
    if rest:
        raise UsageError(f"unknown parameter(s): {', '.join(sorted(rest))}")
    stim = parse_stimulus(_read(stimulus), d)
    frames = len(stim) if frames is None else frames
    if frames > len(stim):
        raise UsageError(f"{frames} frames requested but the stimulus has {len(stim)}")
    stim = stim[:frames]
    ternary = any(tw.xmask for f in stim for tw in f.values()) or any(
        w.init is None for w in d.registers
    )
    if ternary:
        try:
            trace = simulate_ternary(d, stim, frames, budget)
        except OracleError as exc:
            raise UsageError(f"{exc}; raise --budget or give concrete values") from None
    else:
        trace = simulate_concrete(d, [{k: v.value for k, v in f.items()} for f in stim], frames)
    names = list(d.words)
    out.write("frame\t" + "\t".join(names) + "\n")
    for t in range(frames):
        cells = []
        for name in names:
            v = trace.frames[t][name]
            x = trace.xmasks[t][name] if trace.xmasks else 0
            cells.append(str(v) if not x else str(TernaryWord(d.words[name].width, v & ~x, x)))
        out.write(f"{t}\t" + "\t".join(cells) + "\n")
    for flag in trace.flags:
        out.write(f"# {flag}\n")
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wordste", description="Word-level symbolic trajectory evaluation.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                        help="override a design or spec parameter (repeatable)")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    v = sub.add_parser("verify", help="check a trajectory spec against a design")
    v.add_argument("design", type=Path)
    v.add_argument("spec", type=Path)
    common(v)
    v.add_argument("--mode", choices=["ste", "bmc"], default="ste")
    v.add_argument("--frames", type=int)
    v.add_argument("--antfail", choices=["report", "assume"])
    v.add_argument("--shift-mode", choices=list(SHIFT_MODES), default="strict-sound")
    v.add_argument("--solver", help=f"solver command, {{file}} is the script (default ${smt.SOLVER_ENV} "
                                    f"or {smt.DEFAULT_SOLVER!r})")
    v.add_argument("--timeout", type=float, default=60.0, help="seconds per solver call")
    v.add_argument("--dump-smt", type=Path, metavar="FILE", help="write the consequent query here")

    a = sub.add_parser("atomize", help="print the atom table")
    a.add_argument("design", type=Path)
    a.add_argument("spec", type=Path, nargs="?")
    common(a)

    s = sub.add_parser("simulate", help="concrete or exact ternary simulation")
    s.add_argument("design", type=Path)
    s.add_argument("stimulus", type=Path)
    s.add_argument("--frames", type=int)
    s.add_argument("--budget", type=int, default=12, help="max X bits enumerated by the exact oracle")
    common(s)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE
    try:
        params = parse_params(args.param)
        if args.cmd == "verify":
            cfg = RunConfig(args.design, args.spec, args.mode, args.frames, args.antfail, args.shift_mode,
                            args.solver, args.timeout, args.dump_smt, args.json, tuple(params.items()))
            return cmd_verify(cfg, out)
        if args.cmd == "atomize":
            return cmd_atomize(args.design, args.spec, params, out, args.json)
        return cmd_simulate(args.design, args.stimulus, args.frames, params, args.budget, out)
    except (UsageError, ParseError, AtomizeError) as exc:
        print(f"wordste: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
