"""Command-line runner.

Each invocation writes one run directory under ``--out`` holding
``manifest.json`` (config echo, timestamps, version) and ``payload.json``
(the results).  The payload is a pure function of the config, so rerunning
with the same seed reproduces it byte for byte, whatever ``--workers`` is.

Exit statuses: 0 success, 2 bad configuration or violated precondition,
3 search budget exhausted, 4 failed internal verification.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import InvariantViolation, PolylabelError, PreconditionError, SearchExhausted, Undecodable, UnsupportedDegree
from .families import INCONCLUSIVE, builtin, oracle_relation, random_point
from .framework import Configuration, label_configuration, load_family, separation_witness, strong_check
from .poly import Sign, format_rat, parse_rat
from .sampling import parallel_map, trial_rng

EXIT_OK, EXIT_CONFIG, EXIT_SEARCH, EXIT_INVARIANT = 0, 2, 3, 4
STOCHASTIC = {"count", "wallpair", "verify-family", "sep-check"}


class ConfigError(PolylabelError):
    pass


# -- parsing helpers ----------------------------------------------------------------


def parse_point(text: str) -> tuple:
    try:
        return tuple(parse_rat(x) for x in text.split(","))
    except ValueError as e:
        raise ConfigError(f"bad point {text!r}: {e}") from None


def parse_points(text: str) -> list:
    return [parse_point(p) for p in text.split(";") if p.strip()]


def parse_box_arg(text: str | None):
    if text is None:
        return None
    sides = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            sides.append((parse_rat(lo), parse_rat(hi)))
        except ValueError:
            raise ConfigError(f"bad box side {part!r}; expected lo:hi") from None
    return sides[0] if len(sides) == 1 else sides


def parse_ns(text: str) -> list[int]:
    try:
        ns = [int(x) for x in str(text).split(",")]
    except ValueError:
        raise ConfigError(f"bad --n value {text!r}") from None
    return ns


def resolve_family(args):
    if args.spec and args.family:
        raise ConfigError("give either --family or --spec, not both")
    if args.spec:
        return load_family(args.spec)
    if args.family:
        return builtin(args.family)
    raise ConfigError("a family is required (--family or --spec)")


def _one_n(args):
    if args.n is None:
        raise ConfigError("--n is required")
    ns = parse_ns(args.n)
    if len(ns) != 1:
        raise ConfigError("this subcommand takes a single --n")
    return ns[0]


# -- subcommands ------------------------------------------------------------------


def cmd_bound(args):
    from .counting import sign_pattern_bound, warren_applicable, warren_bound

    if args.family or args.spec:
        fam = resolve_family(args)
        d, k, D, name = fam.d, fam.k, fam.max_degree(), fam.name
    else:
        if None in (args.d, args.k, args.D):
            raise ConfigError("give a family or all of --d, --k, --D")
        d, k, D, name = args.d, args.k, args.D, None
    rows = []
    for n in parse_ns(args.n):
        l, mv = n * (n - 1) // 2 * k, d * n
        rows.append({
            "family": name, "n": n, "d": d, "k": k, "D": D,
            "warren_bound": warren_bound(n, d, k, D),
            "applicable": warren_applicable(n, d, k),
            "sign_pattern_bound": sign_pattern_bound(l, mv, D) if l >= mv else None,
        })
    return {"rows": rows}


def cmd_lower(args):
    from .counting import lower_bound_formula

    if args.m is None:
        raise ConfigError("--m is required")
    d = args.d if args.d is not None else resolve_family(args).d
    return {"rows": [{"n": n, "m": args.m, "d": d, "lower_bound": lower_bound_formula(n, args.m, d)}
                     for n in parse_ns(args.n)]}


def cmd_label(args):
    fam = resolve_family(args)
    if args.points:
        pts = parse_points(args.points)
    else:
        if args.seed is None:
            raise ConfigError("random configurations need --seed (or pass --points)")
        rng = trial_rng(args.seed, 0)
        pts = [random_point(fam, rng, args.box) for _ in range(_one_n(args))]
    cfg = Configuration(pts)
    L = label_configuration(fam, cfg)
    return {
        "family": fam.name,
        "points": cfg.to_json(),
        "labeling": L.to_json(fam.labels),
        "strong": strong_check(fam, cfg),
    }


def cmd_count(args):
    from .counting import sweep_rows

    fam = resolve_family(args)
    if args.trials is None:
        raise ConfigError("--trials is required")
    rows = sweep_rows(fam, parse_ns(args.n), args.trials, args.seed, args.box,
                      strong_only=not args.with_ties, workers=args.workers, m=args.m)
    return {"rows": rows}


def _seed_for(args, fam):
    from .wallpair import find_spanning_seed, seed_from_json

    if args.seed_file:
        data = json.loads(Path(args.seed_file).read_text())
        return seed_from_json(fam, data.get("seed", data))
    if args.seed is None:
        if fam.meta.get("builtin") != "POSET_DIM":
            raise ConfigError("construct needs --seed-file or --seed to search for a spanning seed")
        # coordinate orders have a deterministic seed; the value is unused
        return find_spanning_seed(fam, 0)
    return find_spanning_seed(fam, args.seed, args.box, args.budget, args.workers)


def cmd_wallpair(args):
    fam = resolve_family(args)
    seed = _seed_for(args, fam)
    return {"family": fam.name, "seed": seed.to_json(fam)}


def cmd_construct(args):
    from .construct import build_verified_grid, generate_labelings, lower_bound_count
    from .counting import canonical_bytes

    fam = resolve_family(args)
    if args.m is None:
        raise ConfigError("--m is required")
    n = _one_n(args)
    lower_bound_count(n, args.m, fam.d)
    seed = _seed_for(args, fam)
    grid, report = build_verified_grid(fam, seed, args.m, workers=args.workers)
    seen, emitted = set(), []
    total = 0
    for seq, L, cfg in generate_labelings(fam, seed, n, args.m, grid=grid):
        seen.add(canonical_bytes(L))
        total += 1
        if args.emit_labelings:
            emitted.append(L.to_json(fam.labels))
    payload = {
        "family": fam.name,
        "manifest": {
            "count": len(seen),
            "formula_value": lower_bound_count(n, args.m, fam.d),
            "all_distinct": len(seen) == total,
            "all_strong": True,
        },
        "grid": {"eps": format_rat(grid.params.eps), "verification": report.to_json()},
        "seed": seed.to_json(fam),
    }
    if args.emit_labelings:
        payload["labelings"] = emitted
    return payload


def _verify_chunk(job):
    fam, seed, lo, hi, box = job
    agree = disagree = inconclusive = skipped = 0
    bad = []
    for t in range(lo, hi):
        rng = trial_rng(seed, t)
        a, b = random_point(fam, rng, box), random_point(fam, rng, box)
        signs = fam.signs(a, b)
        if Sign.ZERO in signs:
            skipped += 1
            continue
        o = oracle_relation(fam, a, b)
        if o == INCONCLUSIVE:
            inconclusive += 1
        elif o == fam.labels[fam.phi(signs)]:
            agree += 1
        else:
            disagree += 1
            bad.append([[format_rat(x) for x in a], [format_rat(x) for x in b]])
    return agree, disagree, inconclusive, skipped, bad


def cmd_verify_family(args):
    from .sampling import chunk_ranges

    fam = resolve_family(args)
    trials = args.trials or 1000
    jobs = [(fam, args.seed, lo, hi, args.box) for lo, hi in chunk_ranges(trials, 250)]
    tot = [0, 0, 0, 0]
    bad = []
    for part in parallel_map(_verify_chunk, jobs, args.workers):
        for i in range(4):
            tot[i] += part[i]
        bad += part[4]
    return {
        "family": fam.name, "trials": trials, "agree": tot[0], "disagree": tot[1],
        "inconclusive": tot[2], "non_strong": tot[3], "counterexamples": bad[:10],
    }


def cmd_sep_check(args):
    fam = resolve_family(args)
    if not args.points:
        raise ConfigError("sep-check needs --points 'a;a2'")
    pts = parse_points(args.points)
    if len(pts) != 2:
        raise ConfigError("sep-check needs exactly two points")
    w = separation_witness(fam, pts[0], pts[1], box=args.box, budget=args.trials or 1000, seed=args.seed)
    if w is None:
        return {"family": fam.name, "found": False}
    return {
        "family": fam.name,
        "found": True,
        "b": [format_rat(x) for x in w.b],
        "signs_a": "".join(s.char for s in w.signs_a),
        "signs_a2": "".join(s.char for s in w.signs_a2),
        "labels": [fam.labels[w.label_a], fam.labels[w.label_a2]],
    }


COMMANDS = {
    "label": cmd_label,
    "count": cmd_count,
    "bound": cmd_bound,
    "lower": cmd_lower,
    "construct": cmd_construct,
    "wallpair": cmd_wallpair,
    "verify-family": cmd_verify_family,
    "sep-check": cmd_sep_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polylabel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--family", help="builtin id, e.g. DISKS, BALLS:3, POSET_DIM:2")
        s.add_argument("--spec", help="family spec file (JSON)")
        s.add_argument("--n", help="vertex count; count and bound accept a comma list")
        s.add_argument("--m", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int, help="64-bit seed; required for stochastic subcommands")
        s.add_argument("--box", help="sampling box, 'lo:hi' or 'lo:hi,lo:hi,...'")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--format", choices=("json", "table", "csv"), default="json")
        s.add_argument("--out", help="results directory; one subdirectory per run")
        if name == "bound" or name == "lower":
            s.add_argument("--d", type=int)
        if name == "bound":
            s.add_argument("--k", type=int)
            s.add_argument("--D", type=int)
        if name in ("label", "sep-check"):
            s.add_argument("--points", help="';'-separated points of ','-separated rationals")
        if name == "count":
            s.add_argument("--with-ties", action="store_true", help="also count non-strong configurations")
        if name in ("construct", "wallpair"):
            s.add_argument("--seed-file", help="spanning seed record from the wallpair subcommand")
            s.add_argument("--budget", type=int, default=4000)
        if name == "construct":
            s.add_argument("--emit-labelings", action="store_true")
    return p


def _validate(args):
    if args.command in STOCHASTIC and args.seed is None:
        raise ConfigError(f"{args.command} is stochastic and needs an explicit --seed")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigError("--seed must be in [0, 2^64)")
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    if args.command in ("bound", "lower", "count", "construct") and args.n is None:
        raise ConfigError("--n is required")
    args.box = parse_box_arg(args.box)


def _config_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "box" and v is not None:
            v = [[format_rat(x) for x in side] for side in (v if isinstance(v, list) else [v])]
        out[k] = v
    out.pop("workers", None)
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, Fraction):
        return format_rat(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _rows_of(payload):
    if "rows" in payload:
        return payload["rows"]
    if "manifest" in payload:
        return [{"family": payload["family"], **payload["manifest"], "eps": payload["grid"]["eps"]}]
    if "seed" in payload:
        seed = payload["seed"]
        return [
            {"family": payload["family"], "pair": i + 1, "s": w["s"], "b": " ".join(w["b"]), "det": seed["det"]}
            for i, w in enumerate(seed["pairs"])
        ]
    return [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]


def render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return "\n".join(json.dumps(r, sort_keys=True, ensure_ascii=False, default=_json_default)
                         for r in (payload["rows"] if "rows" in payload else [payload])) + "\n"
    rows = _rows_of(payload)
    if not rows:
        return ""
    cols = list(rows[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    cells = [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def persist(out_dir, args, payload_text: str, started: str, finished: str) -> Path:
    config = _config_echo(args)
    tag = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:10]
    base = Path(out_dir)
    run = base / f"{args.command}-{tag}-{started.replace(':', '').replace('-', '')}"
    k = 1
    while run.exists():
        k += 1
        run = base / f"{args.command}-{tag}-{started.replace(':', '').replace('-', '')}-{k}"
    run.mkdir(parents=True)
    (run / "payload.json").write_text(payload_text)
    manifest = {
        "config": config,
        "workers": args.workers,
        "started": started,
        "finished": finished,
        "version": __version__,
        "exact_arithmetic": True,
        "payload_sha256": hashlib.sha256(payload_text.encode()).hexdigest(),
    }
    (run / "manifest.json").write_text(_dumps(manifest))
    return run


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        _validate(args)
        payload = COMMANDS[args.command](args)
    except (ConfigError, PreconditionError, UnsupportedDegree, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SearchExhausted as e:
        print(f"search exhausted: {e}", file=sys.stderr)
        return EXIT_SEARCH
    except (InvariantViolation, Undecodable) as e:
        print(f"INVARIANT FAILURE: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    finished = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = _dumps(payload)
    if args.out:
        where = persist(args.out, args, text, started, finished)
        print(f"run directory: {where}", file=sys.stderr)
    stdout.write(render(payload, args.format))
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
