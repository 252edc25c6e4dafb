"""Degree sweeps and the three figure presets.

A sweep fits one surrogate per degree, pushes the input density through both
the target map and the surrogate, and records the density, function and
transport errors. Rows are independent, so degrees may run in worker
processes; the output is identical to a serial run.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import GpcError, NumericalError, PreconditionError
from .metrics import (
    CSV_FIELDS,
    SweepRecord,
    fit_rate,
    lq_density_distance,
    quantile_distance,
    quantile_rule,
)
from .pushforward import (
    as_density,
    default_bins,
    evaluate,
    histogram_density,
    monotone_decomposition,
    pdf_grid,
    quantile,
    sample_pushforward,
)
from .surrogate import Method, Norm, error_norms, fit, get_function

WASS_POINTS = 512


class SweepFailure(NumericalError):
    """A numerical failure inside one stage of one degree of a sweep.

    ``degree`` is None when the exact map itself could not be processed.
    """

    def __init__(self, degree: Optional[int], stage: str, cause: Exception):
        where = "reference map" if degree is None else f"degree {degree}"
        super().__init__(f"{where}, stage {stage}: {cause}")
        self.degree = degree
        self.stage = stage
        self.cause = cause


def parse_degrees(text: str) -> tuple:
    """Parse ``10,50``, ``2:100:2`` (inclusive, stride 2) or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                if len(bits) not in (2, 3):
                    raise ValueError
                start, stop = bits[0], bits[1]
                step = bits[2] if len(bits) == 3 else 1
                if step < 1:
                    raise ValueError
                out.extend(range(start, stop + 1, step))
            else:
                out.append(int(part))
        except ValueError:
            raise PreconditionError(f"cannot parse degree list {text!r}") from None
    return tuple(out)


@dataclass(frozen=True)
class SweepConfig:
    function: str = "sin20"
    density: str = "uniform"
    method: Method = Method.COLLOCATION_GL
    degrees: tuple = tuple(range(2, 101, 2))
    base_points: int = 2048
    mc_count: int = 1_000_000
    mc_seed: int = 0
    bins: Optional[int] = None
    out: Optional[str] = None
    no_timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        degrees = tuple(int(n) for n in self.degrees)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "method", Method(self.method))
        if not degrees:
            raise PreconditionError("degree list is empty")
        if degrees[0] < 1 or any(b <= a for a, b in zip(degrees, degrees[1:])):
            raise PreconditionError("degrees must be positive and strictly ascending")
        if self.mc_count < 1000:
            raise PreconditionError("mc_count must be >= 1000")
        if self.base_points < 64:
            raise PreconditionError("base_points must be >= 64")
        if self.bins is not None and self.bins < 2:
            raise PreconditionError("bins must be >= 2")
        if self.jobs < 1:
            raise PreconditionError("jobs must be >= 1")
        get_function(self.function)
        as_density(self.density)

    @property
    def histogram_bins(self) -> int:
        return self.bins if self.bins is not None else default_bins(self.mc_count)


@dataclass
class _Reference:
    """Everything about the exact map that every degree reuses."""

    f: object
    rho: object
    pm: object
    grid: object
    weights: np.ndarray
    levels: np.ndarray
    quantiles: np.ndarray


def _stage(n, name, fn, *args):
    try:
        return fn(*args)
    except (GpcError, ArithmeticError, ValueError) as exc:
        raise SweepFailure(n, name, exc) from exc


def _reference(cfg: SweepConfig) -> _Reference:
    f = get_function(cfg.function)
    rho = as_density(cfg.density)
    pm = _stage(None, "decomposition", monotone_decomposition, f)
    grid = _stage(None, "pdf_grid", pdf_grid, pm, rho, cfg.base_points)
    t, w = quantile_rule(WASS_POINTS)
    return _Reference(f, rho, pm, grid, w, t, _stage(None, "wass1", quantile, pm, rho, t))


def _degree_record(cfg: SweepConfig, ref: _Reference, n: int) -> SweepRecord:
    start = time.perf_counter()
    g = _stage(n, "fit", fit, ref.f, n, cfg.method)
    pm = _stage(n, "decomposition", monotone_decomposition, g)
    grid = _stage(n, "pdf_grid", pdf_grid, pm, ref.rho, cfg.base_points)
    l1 = _stage(n, "l1_pdf_error", lq_density_distance, ref.grid, grid)
    l2 = _stage(n, "l2_error", error_norms, ref.f, g, Norm.L2)
    h1 = _stage(n, "h1_error", error_norms, ref.f, g, Norm.H1)
    qg = _stage(n, "wass1", quantile, pm, ref.rho, ref.levels)
    wass1 = quantile_distance(ref.quantiles, qg, ref.weights, 1.0)
    elapsed = 0.0 if cfg.no_timing else time.perf_counter() - start
    return SweepRecord(n, l1, l2, h1, wass1, elapsed)


_WORKER = {}


def _worker_init(cfg):
    _WORKER["cfg"] = cfg
    _WORKER["ref"] = _reference(cfg)


def _worker_run(n):
    return _degree_record(_WORKER["cfg"], _WORKER["ref"], n)


def run_sweep(cfg: SweepConfig) -> list:
    """One :class:`SweepRecord` per degree, ascending; also written to ``cfg.out``."""
    if cfg.jobs > 1 and len(cfg.degrees) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_worker_init, initargs=(cfg,)) as pool:
            records = list(pool.map(_worker_run, cfg.degrees))
    else:
        ref = _reference(cfg)
        records = [_degree_record(cfg, ref, n) for n in cfg.degrees]
    if cfg.out:
        write_csv(records, cfg.out)
    return records


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([str(r.degree)] + [_fmt(r.value(name)) for name in CSV_FIELDS[1:]])
    return buf.getvalue()


def write_csv(records: Sequence[SweepRecord], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(format_csv(records))


def read_csv(path) -> list:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise PreconditionError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            SweepRecord(int(row["n"]), *(float(row[name]) for name in CSV_FIELDS[1:]))
            for row in reader
        ]


# -- figure presets ------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """One acceptance condition: a measured value compared with a bound."""

    name: str
    measured: float
    expected: str
    ok: bool

    def __str__(self):
        status = "ok" if self.ok else "VIOLATED"
        return f"{self.name}: measured {self.measured:.6g}, expected {self.expected} [{status}]"


def _l1(records, lo, hi):
    return [r.l1_pdf_error for r in records if lo <= r.degree <= hi]


def _fig1_checks(records, fit):
    by_n = {r.degree: r.l1_pdf_error for r in records}
    low = _l1(records, 1, 30)
    late = _l1(records, 50, 80)
    drop = math.log10(by_n[34]) - math.log10(by_n[70]) if by_n.get(34) and by_n.get(70) else float("nan")
    return [
        Check("min l1 over n <= 30", min(low), "> 0.1", min(low) > 0.1),
        Check("l1 at n = 50", by_n.get(50, float("nan")), "< 1e-3", by_n.get(50, 1.0) < 1e-3),
        Check("min l1 over n in [50, 80]", min(late), "< 1e-6", min(late) < 1e-6),
        Check("decades dropped from n = 34 to n = 70", drop, ">= 8", drop >= 8),
    ]


def _exponent_check(target, half_width):
    def checks(records, fit):
        exponent = fit[1]
        lo, hi = target - half_width, target + half_width
        return [Check("fitted exponent", exponent, f"in [{lo:.2f}, {hi:.2f}]", lo <= exponent <= hi)]

    return checks


def _fig2_checks(records, fit):
    amplitude = fit[0]
    out = _exponent_check(-1.44, 0.25)(records, fit)
    out.append(Check("fitted amplitude", amplitude, "in [1.31, 5.24]", 2.62 / 2 <= amplitude <= 2.62 * 2))
    return out


@dataclass(frozen=True)
class FigurePreset:
    name: str
    function: str
    degrees: tuple
    window: tuple
    showcase: tuple = (10, 50)
    checks: object = field(default=None, repr=False)


FIGURES = {
    "fig1": FigurePreset("fig1", "sin20", tuple(range(2, 101, 2)), (34, 60), checks=_fig1_checks),
    "fig2": FigurePreset("fig2", "abs_cubed", tuple(range(4, 129, 2)), (10, 100), checks=_fig2_checks),
    "fig3": FigurePreset("fig3", "abs_shift", tuple(range(4, 129, 2)), (10, 100), checks=_exponent_check(-0.78, 0.25)),
}


@dataclass
class Reproduction:
    figure: str
    records: list
    fit: tuple
    checks: list
    files: dict

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def figure_config(figure: str, **overrides) -> SweepConfig:
    try:
        preset = FIGURES[figure]
    except KeyError:
        raise PreconditionError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}") from None
    cfg = SweepConfig(function=preset.function, degrees=preset.degrees)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def density_table(cfg: SweepConfig, degrees: Sequence[int], points: int = 2000) -> str:
    """CSV of p_mu, each p_nu_n and a histogram of p_nu_n on cell midpoints.

    Histogram samples for degree n come from the stream (mc_seed, n).
    """
    f = get_function(cfg.function)
    rho = as_density(cfg.density)
    maps = [monotone_decomposition(f)]
    for n in degrees:
        maps.append(monotone_decomposition(fit(f, n, cfg.method)))
    lo = min(pm.support[0] for pm in maps)
    hi = max(pm.support[1] for pm in maps)
    edges = np.linspace(lo, hi, points + 1)
    ys = 0.5 * (edges[:-1] + edges[1:])
    columns = [ys, evaluate(maps[0], rho, ys, want_cdf=False)[0]]
    header = ["y", "p_mu"]
    for n, pm in zip(degrees, maps[1:]):
        samples = sample_pushforward(pm, rho, cfg.mc_count, cfg.mc_seed, task=n)
        hist = histogram_density(samples, cfg.histogram_bins, (lo, hi))
        columns += [evaluate(pm, rho, ys, want_cdf=False)[0], hist(ys)]
        header += [f"p_nu_{n}", f"hist_nu_{n}"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([_fmt(v) if math.isfinite(v) else "nan" for v in row])
    return buf.getvalue()


def _plot_script(preset: FigurePreset, cfg: SweepConfig) -> str:
    n_a, n_b = preset.showcase
    return "\n".join(
        [
            f"# {preset.name}: {cfg.function} under the {cfg.density} density",
            "set datafile separator ','",
            "set key top right",
            "set terminal pngcairo size 1200,500",
            f"set output '{preset.name}.png'",
            "set multiplot layout 1,2",
            "set title 'pushforward densities'",
            "set xlabel 'y'",
            "plot 'densities.csv' using 1:2 with lines lw 2 lc 'black' title 'p_mu', \\",
            f"     '' using 1:3 with points pt 7 ps 0.3 lc 'red' title 'p_nu_{n_a}', \\",
            f"     '' using 1:5 with lines dt 4 lc 'blue' title 'p_nu_{n_b}'",
            "set title 'L1 density error'",
            "set xlabel 'n'",
            "set logscale y",
            "set format y '10^{%L}'",
            "plot 'sweep.csv' using 1:2 with linespoints pt 7 title '||p_mu - p_nu_n||_1'",
            "unset multiplot",
            "",
        ]
    )


def reproduce(figure: str, out_dir, **overrides) -> Reproduction:
    """Run a figure preset and write sweep.csv, densities.csv, fit.txt and plot.gp.

    ``overrides`` replace SweepConfig fields (for example ``jobs`` or
    ``no_timing``); the degree schedule and fit window come from the preset.
    """
    preset = FIGURES.get(figure)
    cfg = figure_config(figure, **overrides)
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "sweep": os.path.join(out_dir, "sweep.csv"),
        "densities": os.path.join(out_dir, "densities.csv"),
        "fit": os.path.join(out_dir, "fit.txt"),
        "plot": os.path.join(out_dir, "plot.gp"),
    }
    cfg = replace(cfg, out=files["sweep"])
    records = run_sweep(cfg)
    usable = [r for r in records if not r.floored]
    amplitude, exponent = fit_rate(usable, "l1_pdf_error", *preset.window)
    with open(files["densities"], "w", newline="", encoding="ascii") as fh:
        fh.write(density_table(cfg, preset.showcase))
    used = sum(1 for r in usable if preset.window[0] <= r.degree <= preset.window[1])
    with open(files["fit"], "w", encoding="ascii") as fh:
        fh.write(
            f"function = {cfg.function}\n"
            f"method = {cfg.method.value}\n"
            f"window = {preset.window[0]} {preset.window[1]}\n"
            f"points = {used}\n"
            f"amplitude = {_fmt(amplitude)}\n"
            f"exponent = {_fmt(exponent)}\n"
        )
    with open(files["plot"], "w", encoding="ascii") as fh:
        fh.write(_plot_script(preset, cfg))
    checks = preset.checks(records, (amplitude, exponent))
    return Reproduction(figure, records, (amplitude, exponent), checks, files)
