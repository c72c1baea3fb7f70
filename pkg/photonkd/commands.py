"""
Subcommand implementations. Each takes the parsed arguments and a Console
and returns the process exit code; errors are raised and mapped to codes by
``photonkd.cli``.
"""
import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

from .config import load_config, preset_settings, with_output
from .core import random_stream
from .errors import DataError, InvalidArgumentError
from .mub import ALL_BASES, CSCO_NAMES, BasisId, default_table, flag_appendix_rows, state_name, verify_unbiasedness
from .mzem import CANONICAL_LABELS, detection_matrix, scan_visibility
from .postproc import final_key_length, privacy_amplify, reconcile
from .protocol import RoundRecord, run
from .ui.console import Console
from .utils.keyio import read_key, write_key
from .utils.spinner import Spinner

logger = logging.getLogger("photonkd.commands")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3

UNBIASED_TOLERANCE = 1e-10
AMPLITUDE_COLUMNS = ("re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11")


def _number(x: float) -> float:
    """Round to 10 significant digits so printed output is stable."""
    return float(f"{x:.10g}")


def _json(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _open_output(path: str) -> TextIO:
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    return open(path, "w", encoding="utf-8", newline="")


def _check_outputs(paths: Iterable[Optional[str]]) -> None:
    """Refuse a run whose outputs cannot all be written, before any of them is."""
    for path in paths:
        if not path:
            continue
        if os.path.isdir(path):
            raise DataError(f"Output path is a directory: {path}")
        directory = os.path.dirname(path)
        if directory and os.path.exists(directory) and not os.path.isdir(directory):
            raise DataError(f"Output directory is a file: {directory}")


def cmd_mubs(args, console: Console) -> int:
    """Print the basis table and its unbiasedness report."""
    table = default_table()
    bases = [BasisId.parse(args.basis)] if args.basis else list(ALL_BASES)

    if args.format == "csv":
        writer = csv.writer(console.out, lineterminator="\n")
        writer.writerow(("basis", "state", "label") + AMPLITUDE_COLUMNS)
        for b in bases:
            for i, psi in enumerate(table.basis(b)):
                parts = [f"{_number(v):.10g}" for z in psi.amp for v in (z.real, z.imag)]
                writer.writerow([b.value, table.label(b, i), state_name(b, i)] + parts)
    else:
        for b in bases:
            console.print_title(f"{b.value}  CSCO {{{', '.join(CSCO_NAMES[b])}}}")
            for i, psi in enumerate(table.basis(b)):
                amplitudes = "  ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in psi.amp)
                console.print_line(f"  {table.label(b, i)}  {state_name(b, i):<34} {amplitudes}")
            console.print_line()

    report = verify_unbiasedness(table)
    flagged = flag_appendix_rows(table)
    if args.format != "csv":
        console.print_info(
            f"Unbiasedness: {report.n_pairs} cross-basis pairs, max | |<a|b>|^2 - 1/4 | = {report.max_deviation:.3e}"
            f" (worst {report.worst_pair[0]} vs {report.worst_pair[1]})"
        )
        console.print_info(f"Preparation circuits disagreeing with the table: {len(flagged)}")

    if args.verify:
        if report.max_deviation > UNBIASED_TOLERANCE or flagged:
            console.print_error(
                f"Verification failed: max deviation {report.max_deviation:.3e}, {len(flagged)} flagged rows"
            )
            return EXIT_VERIFY_FAILED
        if args.format != "csv":
            console.print_success("Verification passed")
    return EXIT_OK


def stats_document(result_stats, config) -> Dict[str, Any]:
    document: Dict[str, Any] = {}
    for key, value in result_stats.as_dict().items():
        document[key] = _number(value) if isinstance(value, float) else value
    document["basis_set"] = [b.value for b in config.basis_set]
    document["eve"] = config.eve.enabled
    document["seed"] = config.seed
    return document


def write_records(stream: TextIO, records: Iterable[RoundRecord]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RoundRecord.CSV_HEADER)
    for record in records:
        writer.writerow(record.as_row())


def cmd_simulate(args, console: Console) -> int:
    """Run the protocol from a config file and write stats, records and keys."""
    run_config = load_config(
        args.config, seed=args.seed, rounds=args.rounds, workers=args.workers, preset=args.preset
    )
    run_config = with_output(
        run_config, stats=args.stats, records=args.records, alice_key=args.alice_key, bob_key=args.bob_key
    )
    if args.expect_qber is not None and args.tol is None:
        raise InvalidArgumentError("--expect-qber needs --tol")
    config = run_config.protocol
    output = run_config.output
    _check_outputs([output.stats, output.records, output.alice_key, output.bob_key])

    with Spinner(f"Simulating {config.n_rounds} rounds"):
        result = run(config)

    document = _json(stats_document(result.stats, config))
    try:
        if output.stats:
            with _open_output(output.stats) as f:
                f.write(document)
        else:
            console.out.write(document)
        if output.records:
            with _open_output(output.records) as f:
                write_records(f, result.records)
        if output.alice_key:
            write_key(output.alice_key, result.alice_bits)
        if output.bob_key:
            write_key(output.bob_key, result.bob_bits)
    except OSError as e:
        raise DataError(f"Cannot write output: {e}") from None

    if result.stats.aborted:
        console.print_warning(
            f"Bit error rate {result.stats.bit_error_rate:.6f} is above the abort threshold "
            f"{config.qber_abort_threshold}"
        )

    if args.expect_qber is not None:
        measured = result.stats.symbol_error_rate if args.qber_kind == "symbol" else result.stats.bit_error_rate
        if abs(measured - args.expect_qber) > args.tol:
            console.print_error(
                f"{args.qber_kind} QBER {measured:.6f} differs from expected {args.expect_qber} by more than {args.tol}"
            )
            return EXIT_VERIFY_FAILED
    return EXIT_OK


def _visibility_rows(settings) -> List[Sequence[str]]:
    rows: List[Sequence[str]] = [("state", "port_a", "port_b", "effective")]
    for k, label in enumerate(CANONICAL_LABELS):
        if settings.port_visibility is not None:
            a, b = settings.port_visibility[k]
        else:
            a = b = settings.visibility
        effective = settings.state_visibility(k)
        rows.append((label, f"{_number(a):.10g}", f"{_number(b):.10g}", f"{_number(effective):.10g}"))
    return rows


def cmd_mzem(args, console: Console) -> int:
    """Displacement scans of the mirror overlap, or a preset's detection model."""
    if args.scan_dx is not None:
        start, stop, steps = args.scan_dx
        if steps != int(steps) or steps < 1:
            raise InvalidArgumentError(f"STEPS must be a positive integer, got {steps}")
        rows = scan_visibility(args.mode, start, stop, int(steps), args.points)
        console.print_rows([("dx", "visibility")])
        console.print_rows((f"{_number(dx):.10g}", f"{_number(v):.10g}") for dx, v in rows)
        return EXIT_OK

    if args.preset:
        settings = preset_settings(args.preset)
        console.print_rows(_visibility_rows(settings))
        console.print_line()
        matrix = detection_matrix(settings)
        console.print_rows([("state", "d0_A_H", "d1_A_V", "d2_B_H", "d3_B_V")])
        console.print_rows(
            [label] + [f"{_number(p):.10g}" for p in matrix[k]] for k, label in enumerate(CANONICAL_LABELS)
        )
        return EXIT_OK

    raise InvalidArgumentError("mzem needs --scan-dx FROM TO STEPS or --preset NAME")


def cmd_distill(args, console: Console) -> int:
    """Reconcile and privacy-amplify a pair of sifted keys."""
    alice = read_key(args.alice)
    bob = read_key(args.bob)
    if alice.size != bob.size:
        raise DataError(f"Key lengths differ: {alice.size} vs {bob.size}")
    if alice.size == 0:
        raise DataError("Keys are empty")

    initial_errors = float(np.mean(alice != bob))
    report = reconcile(alice, bob, args.block_size, args.passes, random_stream(args.seed))
    length = final_key_length(alice.size, report.parity_bits_leaked, args.margin)
    if length <= 0:
        raise DataError(
            f"No key left: {alice.size} bits - {report.parity_bits_leaked} leaked - {args.margin} margin = {length}"
        )

    final_key = privacy_amplify(report.corrected, report.parity_bits_leaked, args.seed, args.margin)
    if args.out:
        _check_outputs([args.out])
        try:
            write_key(args.out, final_key)
        except OSError as e:
            raise DataError(f"Cannot write output: {e}") from None

    residual = float(np.mean(alice != report.corrected))
    if residual > 0:
        logger.warning("Keys still differ in %d bits after reconciliation", int(np.sum(alice != report.corrected)))
    console.out.write(
        _json(
            {
                "n_bits": int(alice.size),
                "initial_bit_error_rate": _number(initial_errors),
                "parity_bits_leaked": report.parity_bits_leaked,
                "security_margin": args.margin,
                "final_key_length": int(final_key.size),
                "passes": report.passes,
                "corrections_per_pass": report.corrections_per_pass,
                "residual_error_estimate": _number(report.residual_error_estimate),
                "residual_bit_error_rate": _number(residual),
            }
        )
    )
    return EXIT_OK


COMMANDS = {
    "mubs": cmd_mubs,
    "simulate": cmd_simulate,
    "mzem": cmd_mzem,
    "distill": cmd_distill,
}
