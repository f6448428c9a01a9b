"""Command-line surface: noise, median, convert, scpa, dvr, bench.

Exit codes are a stable scripting contract: 0 success, 1 runtime error
(I/O failures, malformed files), 2 usage error (bad flags or an input
the subcommand cannot accept). All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .colorspace import CONVERSIONS, CONVERT_PATHS, convert_image, get_matrix
from .dvr import GEOMETRY_PRESETS, FrameSource, fps_report, run_pipeline
from .image import (
    Image,
    NoiseSpec,
    UnsupportedInputError,
    inject_impulse_noise,
    read_image,
    write_image,
)
from .median import (
    MEDIAN_KERNELS,
    AdaptiveParams,
    adaptive_median_filter,
    median_filter,
)
from .pearray import CostWeights, TaskTable, init_runtime

__all__ = ["main", "build_parser"]

DEFAULT_DENSITY = 0.1  # convention; dial with --density
DEFAULT_SEED = 1


class UsageError(Exception):
    """Argument-shaped problem discovered after parsing."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return value


def _density(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"density {value} outside [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medarray",
        description="median filtering, color conversion, and a deterministic "
                    "processor-array simulation",
        epilog="exit codes: 0 success, 1 runtime error, 2 usage error",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("noise", help="inject impulse noise into a grayscale image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--density", type=_density, default=DEFAULT_DENSITY)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--mask", help="mask sidecar path (default OUTPUT.mask.pgm)")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("median", help="median-filter a grayscale image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--kernel", choices=MEDIAN_KERNELS + ("adaptive",),
                   default="naive")
    p.add_argument("--initial-window", type=_positive_int, default=3)
    p.add_argument("--max-window", type=_positive_int, default=7)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_median)

    p = sub.add_parser("convert", help="convert an RGB image to another space")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--space", choices=CONVERSIONS, required=True)
    p.add_argument("--path", choices=CONVERT_PATHS, default="real")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("scpa", help="run the processor-array simulation")
    p.add_argument("image", help="RGB input image")
    p.add_argument("--table", help="task table file (default: built-in 4-PE table)")
    p.add_argument("--tile-rows", type=_positive_int, default=16)
    p.add_argument("--trace", help="write the event trace to this file")
    p.add_argument("--out-dir", default=".", help="where converted images land")
    p.add_argument("--report-dir", help="write ledger.csv + ledger.png here")
    p.add_argument("--cost-weight", action="append", default=[],
                   metavar="NAME=VALUE",
                   help="override a cost weight (multiply, add, subtract, "
                        "compare, word); repeatable")
    p.set_defaults(func=cmd_scpa)

    p = sub.add_parser("dvr", help="noise + adaptive-median frame pipeline")
    p.add_argument("out_dir")
    p.add_argument("--preset", choices=sorted(GEOMETRY_PRESETS), default="cif")
    p.add_argument("--width", type=_positive_int)
    p.add_argument("--height", type=_positive_int)
    p.add_argument("--frames", type=_positive_int, required=True)
    p.add_argument("--pattern", choices=("gradient", "checkerboard"),
                   default="gradient")
    p.add_argument("--density", type=_density, default=DEFAULT_DENSITY)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fps-target", type=float, default=30.0)
    p.add_argument("--initial-window", type=_positive_int, default=3)
    p.add_argument("--max-window", type=_positive_int, default=7)
    p.set_defaults(func=cmd_dvr)

    p = sub.add_parser("bench", help="time the widereg kernel against naive")
    p.add_argument("--sizes", default="64,128,256",
                   help="comma-separated image sides")
    p.add_argument("--repetitions", type=_positive_int, default=3)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--report-dir", help="write bench.csv + bench.png here")
    p.set_defaults(func=cmd_bench)

    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_noise(args) -> int:
    img = read_image(args.input)
    noisy, mask = inject_impulse_noise(img, NoiseSpec(args.density, args.seed))
    write_image(noisy, args.output)
    mask_path = args.mask or args.output + ".mask.pgm"
    mask_img = Image((mask.astype(np.uint8)) * 255)
    write_image(mask_img, mask_path)
    print(f"corrupted {int(mask.sum())} of {img.width * img.height} pixels; "
          f"mask at {mask_path}")
    return 0


def cmd_median(args) -> int:
    img = read_image(args.input)
    if args.kernel == "adaptive":
        params = AdaptiveParams(args.initial_window, args.max_window)
        out = adaptive_median_filter(img, params)
    else:
        out = median_filter(img, kernel=args.kernel, threads=args.threads)
    write_image(out, args.output)
    return 0


def cmd_convert(args) -> int:
    img = read_image(args.input)
    out = convert_image(img, get_matrix(args.space), path=args.path,
                        threads=args.threads)
    write_image(out, args.output)
    return 0


def _parse_weights(pairs) -> CostWeights:
    fields = {}
    valid = ("multiply", "add", "subtract", "compare", "word")
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or name not in valid:
            raise UsageError(
                f"bad --cost-weight {pair!r}; use NAME=VALUE with NAME in {valid}"
            )
        try:
            fields[name] = int(value)
        except ValueError:
            raise UsageError(f"--cost-weight {pair!r}: value must be an integer")
    return CostWeights(**fields)


def cmd_scpa(args) -> int:
    from .report import ledger_csv_rows, render_ledger_figure, write_csv

    weights = _parse_weights(args.cost_weight)
    table = TaskTable.load(args.table) if args.table else TaskTable.default()
    img = read_image(args.image)
    run = init_runtime(table, tile_rows=args.tile_rows)
    run.scatter(img)
    results = run.gather()

    os.makedirs(args.out_dir, exist_ok=True)
    for name, converted in sorted(results.items()):
        out_path = os.path.join(args.out_dir, f"{name}.ppm")
        write_image(converted, out_path)
        print(f"PE result {name} -> {out_path}")

    if args.trace:
        run.dump_trace(args.trace)
        print(f"trace ({len(run.trace)} events) -> {args.trace}")

    rows = run.ledger_report(weights)
    print(f"{'conversion':<12}{'pe':>4}{'pixels':>10}{'cycles':>12}"
          f"{'words':>10}{'px/cycle':>12}{'px/cycle+ipc':>14}")
    for r in sorted(rows, key=lambda r: r.ppc_compute, reverse=True):
        print(f"{r.conversion:<12}{r.pe:>4}{r.pixels:>10}{r.compute_cycles:>12}"
              f"{r.message_words:>10}{r.ppc_compute:>12.4f}{r.ppc_with_ipc:>14.4f}")

    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        header, data = ledger_csv_rows(rows)
        csv_path = os.path.join(args.report_dir, "ledger.csv")
        write_csv(csv_path, header, data)
        render_ledger_figure(rows, os.path.join(args.report_dir, "ledger.png"))
        print(f"ledger -> {csv_path} (+ ledger.png)")
    return 0


def cmd_dvr(args) -> int:
    from .report import render_pipeline_figure

    width, height = GEOMETRY_PRESETS[args.preset]
    if args.width:
        width = args.width
    if args.height:
        height = args.height
    src = FrameSource(width, height, args.frames, pattern=args.pattern,
                      fps_target=args.fps_target)
    params = AdaptiveParams(args.initial_window, args.max_window)
    report = run_pipeline(src, NoiseSpec(args.density, args.seed), params,
                          args.out_dir)
    render_pipeline_figure(report, os.path.join(args.out_dir, "report.png"))
    fps = fps_report(report)
    verdict = "PASS" if fps.passed else "FAIL"
    print(f"{report.frame_count} frames {width}x{height}: "
          f"{fps.achieved_fps:.1f} fps achieved vs {fps.fps_target:g} fps target "
          f"[{verdict}]")
    print(f"composites + report.csv + report.png in {args.out_dir}")
    return 0


def _bench_rows(sizes, repetitions, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        img = Image(rng.integers(0, 256, (size, size), dtype=np.uint8))
        timings = {}
        outputs = {}
        for kernel in ("naive", "widereg"):
            best = float("inf")
            for _ in range(repetitions):
                t0 = time.perf_counter()
                out = median_filter(img, kernel=kernel)
                best = min(best, time.perf_counter() - t0)
            timings[kernel] = best * 1000.0
            outputs[kernel] = out
        equal = outputs["naive"] == outputs["widereg"]
        speedup = timings["naive"] / timings["widereg"]
        rows.append((size, timings["naive"], timings["widereg"], speedup, equal))
    return rows


def cmd_bench(args) -> int:
    from .report import render_bench_figure, write_csv

    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}")
    if not sizes or any(s < 3 for s in sizes):
        raise UsageError("--sizes needs integers >= 3")

    rows = _bench_rows(sizes, args.repetitions, args.seed)
    print(f"{'size':>6}{'naive ms':>12}{'widereg ms':>12}{'speedup':>10}{'equal':>7}")
    for size, naive_ms, widereg_ms, speedup, equal in rows:
        print(f"{size:>6}{naive_ms:>12.3f}{widereg_ms:>12.3f}"
              f"{speedup:>10.2f}{str(equal):>7}")
    if not all(r[4] for r in rows):
        raise RuntimeError("kernel outputs diverged; timings are meaningless")
    print("outputs identical on every size; speedup is a measurement, "
          "not a guarantee")

    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        write_csv(
            os.path.join(args.report_dir, "bench.csv"),
            ("size", "naive_ms", "widereg_ms", "speedup", "equal"),
            [(s, f"{n:.3f}", f"{w:.3f}", f"{sp:.3f}", e)
             for s, n, w, sp, e in rows],
        )
        render_bench_figure(rows, os.path.join(args.report_dir, "bench.png"))
        print(f"bench.csv + bench.png in {args.report_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedInputError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: bad files, I/O, module errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
