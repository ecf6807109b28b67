"""Command-line front end: run, sweep, analytic, compare.

All output is CSV.  Exit status is 0 on success, 1 on a usage error and 2
when a simulation breaks one of its invariants.
"""
import argparse
import csv
import io
import logging
import sys
from dataclasses import replace

from . import analytic
from .engine import PS_PER_US
from .erica import EricaParams
from .scenario import ScenarioConfig, SimulationError, config_echo, run, sweep

log = logging.getLogger("abrsim")

SUMMARY_HEADER = ["n", "mss", "t_us", "g_us", "d_km", "q_max_cells", "q_max_time_us", "analytic_cells", "ratio"]
TRACE_HEADER = ["time_us", "queue_cells"]
TABLE2_SOURCES = (3, 10, 30, 40, 50, 100)
SINGLE_N = ("run", "analytic")
DEFAULT_SOURCES = {"sweep": list(TABLE2_SOURCES), "compare": list(analytic.TABLE1_SOURCES), "analytic": None}

# flag name -> (type, builtin default)
OPTIONS = {
    "mss": (int, 512),
    "t-ms": (float, 1.0),
    "g-us": (float, 50.0),
    "distance-km": (float, 1000.0),
    "cwnd-max": (int, 65536),
    "build-segments": (int, 1000),
    "duration-ms": (float, None),
    "nrm": (int, 32),
    "erica-t0-us": (float, 500.0),
    "erica-a": (float, 1.15),
    "erica-b": (float, 1.05),
    "erica-qdlf": (float, 0.5),
    "erica-interval-us": (float, 1000.0),
    "jobs": (int, 1),
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _source_list(text):
    try:
        values = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty source list")
    return values


def _add_common(p):
    p.add_argument("--config", help="file of 'key = value' lines using the flag names")
    for name, (typ, _) in OPTIONS.items():
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--output", "-o", help="write CSV here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = Parser(prog="abrsim", description="TCP over ABR worst-case buffer experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("--sources", type=int, default=None)
    p.add_argument("--trace", help="queue-length trace CSV path")
    _add_common(p)

    p = sub.add_parser("sweep", help="full-factorial mss/g/t/d grid")
    p.add_argument("--sources", type=_source_list, default=None)
    _add_common(p)

    p = sub.add_parser("analytic", help="closed-form queue predictions")
    p.add_argument("--sources", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("compare", help="simulated vs predicted peak queue per source count")
    p.add_argument("--sources", type=_source_list, default=None)
    _add_common(p)
    return parser


def read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("_", "-")
            if key not in OPTIONS and key != "sources":
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def resolve(args):
    """Merge flags over config-file values over builtin defaults."""
    file_values = read_config_file(args.config) if args.config else {}
    merged = {}
    for name, (typ, default) in OPTIONS.items():
        flag = getattr(args, name.replace("-", "_"))
        if flag is not None:
            merged[name] = flag
        elif name in file_values:
            raw = file_values[name]
            try:
                merged[name] = None if raw.lower() == "none" else typ(raw)
            except ValueError:
                raise UsageError(f"bad value for {name}: {raw!r}")
        else:
            merged[name] = default
    if args.sources is None and "sources" in file_values:
        raw = file_values["sources"]
        try:
            args.sources = int(raw) if args.command in SINGLE_N else _source_list(raw)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"bad value for sources: {raw!r}")
    if args.sources is None:
        if args.command == "run":
            raise UsageError("run needs --sources")
        args.sources = DEFAULT_SOURCES.get(args.command)
    return merged


def make_config(opts, n):
    erica = EricaParams(
        t0=opts["erica-t0-us"] * 1e-6,
        a=opts["erica-a"],
        b=opts["erica-b"],
        qdlf=opts["erica-qdlf"],
        interval=opts["erica-interval-us"] * 1e-6,
    )
    duration = opts["duration-ms"]
    return ScenarioConfig(
        n_sources=n,
        mss=opts["mss"],
        t=opts["t-ms"] * 1e-3,
        g=opts["g-us"] * 1e-6,
        d=opts["distance-km"],
        cwnd_max=opts["cwnd-max"],
        build_segments=opts["build-segments"],
        duration=None if duration is None else duration * 1e-3,
        erica=erica,
        nrm=opts["nrm"],
    )


def predict_for(config):
    return analytic.predict(
        analytic.AnalyticInputs(n=config.n_sources, cwnd_max=config.cwnd_max, t=config.t, g=config.g, mss=config.mss, d=config.d)
    )


def summary_row(result):
    c = result.config
    expected = predict_for(c)
    ratio = result.q_max / expected if expected else float("nan")
    return [
        c.n_sources, c.mss, _num(c.t * 1e6), _num(c.g * 1e6), _num(c.d),
        result.q_max, f"{result.q_max_time / PS_PER_US:.6f}", expected, f"{ratio:.4g}",
    ]


def _num(x):
    r = round(x)
    return str(int(r)) if abs(x - r) < 1e-9 else format(x, ".12g")


def write_trace(path, result):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t, q in result.trace:
            w.writerow([f"{t / PS_PER_US:.6f}", int(q)])


def config_lines(config):
    """Config-file text that reproduces ``config`` through ``--config``."""
    e = config.erica
    pairs = [
        ("sources", config.n_sources), ("mss", config.mss), ("t-ms", _num(config.t * 1e3)),
        ("g-us", _num(config.g * 1e6)), ("distance-km", _num(config.d)), ("cwnd-max", config.cwnd_max),
        ("build-segments", config.build_segments),
        ("duration-ms", _num(config.run_duration * 1e3)), ("nrm", config.nrm),
        ("erica-t0-us", _num(e.t0 * 1e6)), ("erica-a", _num(e.a)), ("erica-b", _num(e.b)),
        ("erica-qdlf", _num(e.qdlf)), ("erica-interval-us", _num(e.interval * 1e6)),
    ]
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def _emit(rows, header, output):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_run(args, opts):
    if args.sources < 1:
        raise UsageError("--sources must be at least 1")
    config = make_config(opts, args.sources)
    log.info("running %s", config_echo(config))
    result = run(config)
    if args.trace:
        write_trace(args.trace, result)
    _emit([summary_row(result)], SUMMARY_HEADER, args.output)
    if args.output:
        with open(args.output + ".config", "w") as fh:
            fh.write(config_lines(config))
    return result


def cmd_sweep(args, opts):
    if min(args.sources) < 1:
        raise UsageError("--sources must all be at least 1")
    base = make_config(opts, 1)
    grid = sweep(args.sources, base=base, jobs=opts["jobs"])
    header = ["line", "mss/g/t/d"] + [f"N={n}" for n in args.sources]
    rows = [[line, label] + [per_n[n].q_max for n in args.sources] for line, label, per_n in grid]
    _emit(rows, header, args.output)
    return grid


def cmd_analytic(args, opts):
    base = make_config(opts, 1)
    params = dict(cwnd_max=base.cwnd_max, t=base.t, g=base.g, mss=base.mss, d=base.d)
    if args.sources is not None:
        if args.sources < 0:
            raise UsageError("--sources must be non-negative")
        rows = [(args.sources, analytic.predict(analytic.AnalyticInputs(n=args.sources, **params)))]
    else:
        rows = analytic.table1_analytic(**params)
    _emit(rows, ["n", "analytic_cells"], args.output)
    return rows


def cmd_compare(args, opts):
    if min(args.sources) < 1:
        raise UsageError("--sources must all be at least 1")
    configs = [make_config(opts, n) for n in args.sources]
    if opts["jobs"] > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(opts["jobs"]) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(c) for c in configs]
    rows = [(r.config.n_sources, r.q_max, predict_for(r.config)) for r in results]
    _emit(rows, ["n", "q_max_sim", "q_max_analytic"], args.output)
    return rows


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "analytic": cmd_analytic, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        opts = resolve(args)
        if opts["jobs"] < 1:
            raise UsageError("--jobs must be at least 1")
        COMMANDS[args.command](args, opts)
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"abrsim: error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"abrsim: invariant violation: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
