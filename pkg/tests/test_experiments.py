import dataclasses

import pytest

from gpcpdf import experiments
from gpcpdf.errors import NumericalError, PreconditionError, RegistryError
from gpcpdf.experiments import (
    FIGURES,
    SweepConfig,
    SweepFailure,
    format_csv,
    parse_degrees,
    read_csv,
    run_sweep,
)
from gpcpdf.metrics import CSV_FIELDS


class TestDegrees:
    @pytest.mark.parametrize(
        "text,expected",
        [("10,50", (10, 50)), ("2:10:2", (2, 4, 6, 8, 10)), ("1:3", (1, 2, 3)), ("1:3, 7", (1, 2, 3, 7))],
    )
    def test_parse(self, text, expected):
        assert parse_degrees(text) == expected

    @pytest.mark.parametrize("text", ["a", "1:2:3:4", "5:1:0"])
    def test_bad(self, text):
        with pytest.raises(PreconditionError):
            parse_degrees(text)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(degrees=()), dict(degrees=(5, 3)), dict(degrees=(2, 2)), dict(degrees=(0, 1)),
         dict(mc_count=999), dict(base_points=10), dict(bins=1), dict(jobs=0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(PreconditionError):
            SweepConfig(**kwargs)

    def test_unknown_ids(self):
        with pytest.raises(RegistryError, match="nope"):
            SweepConfig(function="nope")
        with pytest.raises(RegistryError, match="normal"):
            SweepConfig(density="normal")

    def test_bins_default(self):
        assert SweepConfig(mc_count=10 ** 6).histogram_bins == 100
        assert SweepConfig(bins=200).histogram_bins == 200


class TestSweep:
    def test_identity_is_exact(self):
        records = run_sweep(SweepConfig(function="identity", degrees=(1, 2, 3, 4, 5)))
        assert [r.degree for r in records] == [1, 2, 3, 4, 5]
        assert all(r.l1_pdf_error <= 1e-8 for r in records)
        assert all(r.wass1 <= 1e-12 for r in records)

    def test_sin20_showcase(self):
        low, high = run_sweep(SweepConfig(function="sin20", degrees=(10, 50)))
        assert low.l1_pdf_error > 0.3
        assert high.l1_pdf_error < 1e-3

    def test_csv_is_deterministic(self, tmp_path):
        cfg = SweepConfig(function="abs_shift", degrees=(4, 8, 12), no_timing=True)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep(dataclasses.replace(cfg, out=str(a)))
        run_sweep(dataclasses.replace(cfg, out=str(b)))
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == ",".join(CSV_FIELDS)
        assert all(line.endswith(",0") for line in a.read_text().splitlines()[1:])

    def test_parallel_matches_serial(self):
        cfg = SweepConfig(function="abs_cubed", degrees=(4, 6, 8, 10), no_timing=True)
        serial = format_csv(run_sweep(cfg))
        parallel = format_csv(run_sweep(dataclasses.replace(cfg, jobs=2)))
        assert serial == parallel

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "s.csv"
        records = run_sweep(SweepConfig(function="square", degrees=(2, 3), out=str(path)))
        assert read_csv(path) == records

    def test_seventeen_digits(self):
        record = experiments.SweepRecord(3, 1 / 3, 0.1, 0.2, 0.3, 0.0)
        line = format_csv([record]).splitlines()[1]
        assert line.split(",")[1] == "0.33333333333333331"

    def test_failure_names_degree_and_stage(self, monkeypatch):
        def broken(*args, **kwargs):
            raise NumericalError("boom")

        ref = _ref("square")
        monkeypatch.setattr(experiments, "pdf_grid", broken)
        with pytest.raises(SweepFailure) as info:
            experiments._degree_record(SweepConfig(function="square", degrees=(7,)), ref, 7)
        assert info.value.degree == 7 and info.value.stage == "pdf_grid"
        assert "degree 7" in str(info.value)

    def test_failure_in_reference_map(self, monkeypatch):
        def broken(*args, **kwargs):
            raise NumericalError("boom")

        monkeypatch.setattr(experiments, "pdf_grid", broken)
        with pytest.raises(SweepFailure, match="reference map, stage pdf_grid"):
            run_sweep(SweepConfig(function="square", degrees=(2,)))


def _ref(name):
    return experiments._reference(SweepConfig(function=name, degrees=(1,)))


def test_figure_presets():
    assert FIGURES["fig1"].degrees == tuple(range(2, 101, 2))
    assert FIGURES["fig2"].degrees == tuple(range(4, 129, 2)) == FIGURES["fig3"].degrees
    assert FIGURES["fig1"].window == (34, 60)
    assert FIGURES["fig2"].window == (10, 100) == FIGURES["fig3"].window


def test_unknown_figure():
    with pytest.raises(PreconditionError):
        experiments.figure_config("fig9")


def test_density_table_columns():
    cfg = SweepConfig(function="square", degrees=(2,), mc_count=10_000)
    text = experiments.density_table(cfg, (2, 4), points=50)
    lines = text.splitlines()
    assert lines[0] == "y,p_mu,p_nu_2,hist_nu_2,p_nu_4,hist_nu_4"
    assert len(lines) == 51
