"""Command-line driver.

Exit status: 0 on success, 1 when an output fails verification, 2 on bad
parameters.  ``CODEDMR_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from codedmr.design import DesignParams, design_for
from codedmr.engine import CODED, PHASES, STRATEGIES, JobParams, JobReport, run_job, verify_output
from codedmr.errors import ParameterError
from codedmr.protocol import analytic_loads
from codedmr.simnet import PER_RECEIVER, SINGLE_SEND, NetConfig
from codedmr.workloads import Balanced, TeraSort, WordCount, generate_records
from codedmr.workloads.balanced import make_dataset
from codedmr.workloads.terasort import read_records, write_records
from codedmr.workloads.wordcount import EXAMPLE_WORDS, random_text

log = logging.getLogger("codedmr")

EXIT_OK, EXIT_VERIFY, EXIT_PARAM = 0, 1, 2
WORKLOADS = ("terasort", "wordcount", "balanced")
NO_GAIN_WARNING = "k=2: no coding gain"


def _default_seed() -> int:
    raw = os.environ.get("CODEDMR_SEED", "1")
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"CODEDMR_SEED must be an integer, got {raw!r}") from None


def _fmt(x: Fraction) -> str:
    return str(x) if x.denominator != 1 else str(x.numerator)


def _warn_k2(k: int) -> None:
    if k == 2:
        print(f"warning: {NO_GAIN_WARNING}", file=sys.stderr)


def cmd_gen_design(args: argparse.Namespace) -> int:
    params = DesignParams(args.q, args.k)
    d = design_for(args.q, args.k)
    loads = analytic_loads(params)
    if args.out:
        Path(args.out).write_text(d.to_json(indent=None) + "\n", encoding="utf-8")
    _warn_k2(args.k)
    print(f"K={params.K} N={params.N} groups={loads.proposed_groups}")
    print(
        f"L_prop={_fmt(loads.proposed)} ({float(loads.proposed):g}) "
        f"L_uncoded(r={loads.r})={_fmt(loads.uncoded)} "
        f"L_uncoded(r=1)={_fmt(analytic_loads(params, 1).uncoded)} "
        f"L_prior(r={loads.r})={_fmt(loads.prior)} N_prior={loads.prior_subfiles} "
        f"groups_prior={loads.prior_groups}"
    )
    return EXIT_OK


@dataclass
class ExperimentConfig:
    q: int = 2
    k: int = 3
    funcs: int | None = None
    records: int = 100_000
    seed: int = 1
    rate_mbps: float = 100.0
    multicast: str = SINGLE_SEND
    strategy: str = CODED
    workload: str = "terasort"
    samples: int | None = None
    headers: bool = True
    record_size: int = 16
    words: Sequence[str] = EXAMPLE_WORDS
    input: str | None = None
    text: str | None = None
    out: str | None = None
    log_csv: str | None = None

    def validate(self, shape: bool = True) -> None:
        """Check flags before any work starts; ``shape=False`` skips the (q, k, Q) checks."""
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")
        if self.workload not in WORKLOADS:
            raise ParameterError(f"unknown workload {self.workload!r}")
        if self.records < 0:
            raise ParameterError("--records must be >= 0")
        NetConfig(self.rate_mbps * 1e6, self.multicast)
        if not shape:
            return
        DesignParams(self.q, self.k)
        K = self.q * self.k
        Q = self.functions
        if Q < 1 or Q % K:
            raise ParameterError(f"K={K} must divide Q={Q}")
        if self.workload == "wordcount" and Q != len(self.words):
            raise ParameterError(f"word count computes {len(self.words)} functions but Q={Q}")

    @property
    def functions(self) -> int:
        if self.funcs is not None:
            return self.funcs
        if self.workload == "wordcount":
            return len(self.words)
        return self.q * self.k


def _load_config(args: argparse.Namespace, shape: bool = True) -> ExperimentConfig:
    values = {k: v for k, v in vars(args).items() if k in ExperimentConfig.__dataclass_fields__ and v is not None}
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(overrides) - set(ExperimentConfig.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        values.update(overrides)
    cfg = ExperimentConfig(**values)
    cfg.validate(shape)
    return cfg


def _dataset_and_workload(cfg: ExperimentConfig, Q: int) -> tuple[Any, Any]:
    if cfg.workload == "terasort":
        data = read_records(cfg.input) if cfg.input else generate_records(cfg.records, cfg.seed)
        return data, TeraSort(Q, samples=cfg.samples, seed=cfg.seed)
    if cfg.workload == "wordcount":
        text = Path(cfg.text).read_text(encoding="utf-8") if cfg.text else random_text(cfg.records, cfg.seed)
        return text, WordCount(cfg.words)
    return make_dataset(cfg.records, cfg.record_size, cfg.seed), Balanced(Q, cfg.record_size)


def _execute(cfg: ExperimentConfig, strategy: str, q: int, k: int) -> tuple[JobReport, bool, str]:
    Q = cfg.funcs if cfg.funcs is not None else (len(cfg.words) if cfg.workload == "wordcount" else q * k)
    if Q % (q * k):
        raise ParameterError(f"K={q * k} must divide Q={Q}")
    if cfg.workload == "wordcount" and Q != len(cfg.words):
        raise ParameterError(f"word count computes {len(cfg.words)} functions but Q={Q}")
    dataset, workload = _dataset_and_workload(cfg, Q)
    net = NetConfig(cfg.rate_mbps * 1e6, cfg.multicast)
    outputs, report = run_job(dataset, workload, strategy, JobParams(q, k, Q, cfg.headers), net)
    verdict = verify_output(outputs, workload, dataset)
    return report, verdict.passed, verdict.message


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if cfg.strategy == CODED:
        _warn_k2(cfg.k)
    report, passed, message = _execute(cfg, cfg.strategy, cfg.q, cfg.k)
    doc = report.to_dict()
    doc["verified"] = passed
    text = json.dumps(doc, indent=2)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    if cfg.log_csv and report.log is not None:
        Path(cfg.log_csv).write_text(report.log.to_csv(), encoding="utf-8")
    print(text)
    print(f"verification: {'PASS' if passed else 'FAIL'} ({message})", file=sys.stderr)
    return EXIT_OK if passed else EXIT_VERIFY


COLUMNS = (
    "strategy", "q", "k", "K", "N", "analytic_load", "measured_load", "shuffle_bits",
    "payload_bits", "overhead_bits", "codegen_s", "map_s", "encode_s", "shuffle_s",
    "decode_s", "reduce_s", "total_s", "rate_mbps", "speedup_bits", "verified",
)


def _parse_row(text: str) -> tuple[str, int, int]:
    try:
        strategy, q, k = text.split(":")
        return strategy, int(q), int(k)
    except ValueError:
        raise ParameterError(f"row {text!r} is not STRATEGY:q:k") from None


def compare_rows(cfg: ExperimentConfig, rows: Sequence[tuple[str, int, int]]) -> list[dict[str, Any]]:
    if len(rows) < 2:
        raise ParameterError("compare needs at least two rows")
    for strategy, q, k in rows:
        DesignParams(q, k)
        if strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {strategy!r}")
    table = []
    first_bits = None
    for strategy, q, k in rows:
        report, passed, _ = _execute(cfg, strategy, q, k)
        bits = report.shuffle_bits
        first_bits = bits if first_bits is None else first_bits
        speedup = first_bits / bits if bits else None
        sec = report.phase_seconds
        table.append(
            {
                "strategy": strategy,
                "q": q,
                "k": k,
                "K": report.K,
                "N": report.N,
                "analytic_load": report.analytic_load,
                "measured_load": report.measured_load,
                "shuffle_bits": bits,
                "payload_bits": report.payload_bits,
                "overhead_bits": report.overhead_bits,
                **{f"{p}_s": sec[p] for p in PHASES},
                "total_s": report.total_seconds,
                "rate_mbps": report.rate_bps / 1e6,
                "speedup_bits": speedup,
                "verified": passed,
            }
        )
    return table


def _cell(value: Any, csv_mode: bool) -> str:
    if isinstance(value, Fraction):
        return _fmt(value) if csv_mode else f"{float(value):.6g}"
    if isinstance(value, float):
        return repr(value) if csv_mode else f"{value:.4g}"
    if value is None:
        return "inf"
    return str(value)


def render_csv(table: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in table:
        w.writerow([_cell(row[c], True) for c in COLUMNS])
    return buf.getvalue()


def render_text(table: Sequence[dict[str, Any]]) -> str:
    cells = [list(COLUMNS)] + [[_cell(row[c], False) for c in COLUMNS] for row in table]
    widths = [max(len(r[i]) for r in cells) for i in range(len(COLUMNS))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n(phase seconds are simulated)"


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load_config(args, shape=False)
    rows = [_parse_row(r) for r in args.row or []]
    table = compare_rows(cfg, rows)
    csv_text = render_csv(table)
    if cfg.out:
        Path(cfg.out).write_text(csv_text, encoding="utf-8")
    print(render_text(table))
    return EXIT_OK if all(r["verified"] for r in table) else EXIT_VERIFY


def cmd_gen_data(args: argparse.Namespace) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    if args.records < 0:
        raise ParameterError("--records must be >= 0")
    write_records(args.out, generate_records(args.records, seed))
    print(f"wrote {args.records} records to {args.out}")
    return EXIT_OK


def _add_job_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--funcs", type=int, help="number of functions Q (default K)")
    p.add_argument("--records", type=int, help="records (terasort, balanced) or words (wordcount)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rate-mbps", dest="rate_mbps", type=float)
    p.add_argument("--multicast", choices=(SINGLE_SEND, PER_RECEIVER))
    p.add_argument("--workload", choices=WORKLOADS)
    p.add_argument("--samples", type=int, help="boundary samples for terasort")
    p.add_argument("--record-size", dest="record_size", type=int, help="balanced workload record size")
    p.add_argument("--words", nargs="+", help="target words for wordcount")
    p.add_argument("--input", help="raw 100-byte record file for terasort")
    p.add_argument("--text", help="text file for wordcount")
    p.add_argument("--no-headers", dest="headers", action="store_false", default=None,
                   help="leave coded transmission headers out of the bit count")
    p.add_argument("--config", help="JSON file whose keys override flags")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedmr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-design", help="build an SPC resolvable design")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_design)

    p = sub.add_parser("run", help="run one job and verify it")
    _add_job_flags(p)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--log-csv", dest="log_csv", help="write the transfer log as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate several strategies on one dataset")
    _add_job_flags(p)
    p.add_argument("--row", action="append", help="STRATEGY:q:k, repeatable")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-data", help="write random TeraSort records")
    p.add_argument("--records", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command in ("run", "compare") and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
