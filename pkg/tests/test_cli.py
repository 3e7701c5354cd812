import io
import os

import pytest

from capitula import cli, cycunits


def run_cli(*argv):
    out = io.StringIO()
    cli.main(list(argv), out=out)
    return out.getvalue()


class TestSubcommands:
    def test_classgroup(self):
        text = run_cli("classgroup", "--disc", "-39")
        assert "h=4" in text and "invariants=[4]" in text

    def test_unit(self):
        text = run_cli("unit", "--disc", "12")
        assert "x=4 y=1 norm=1" in text

    def test_visible(self):
        text = run_cli("visible", "--disc", "60", "--d1", "12")
        assert "order=2" in text

    def test_fitting(self):
        text = run_cli("fitting", "--ell", "2089", "--p", "3", "--chi", "2")
        assert text.startswith("ell=2089 p=3 chi=2 n=2 prec=5")

    def test_capitulation(self):
        text = run_cli("capitulation", "--ell", "7873", "--p", "3")
        assert '"status": "partial"' in text
        assert '"order": 3' in text

    def test_period(self):
        text = run_cli("period", "--ell", "7", "--deg", "3")
        assert "coefficients=[-1, -2, 1, 1]" in text

    def test_scan_small(self):
        text = run_cli("--format", "csv", "scan", "--kind", "quad",
                       "--p", "3", "--max", "100", "--mod", "1:12")
        assert text.splitlines() == [",".join(cli.CSV_COLUMNS)]

    def test_scan_rejects_long_without_flag(self):
        with pytest.raises(SystemExit):
            run_cli("scan", "--kind", "quad", "--p", "3", "--max", "20001")

    def test_ingest_export_roundtrip(self, tmp_path):
        path = tmp_path / "t.txt"
        run_cli("export", "--file", str(path), "--ell", "2089",
                "--p", "3", "--chi", "2")
        text = run_cli("ingest", "--file", str(path))
        assert "ingested 1 records" in text


class TestScans:
    def test_quadratic_small_range(self):
        recs = cli.scan_quadratic(3, 1, 12, 1200)
        assert [r.ell for r in recs] == [229, 733, 1129]
        assert all(r.status in ("full", "partial") for r in recs)
        assert all("maximal_capitulation" in r.certificates for r in recs)
        by_ell = {r.ell: r for r in recs}
        assert by_ell[1129].class_part == (9,)
        assert by_ell[1129].kernel == 3

    def test_no_potential_range(self):
        recs = cli.scan_quadratic(3, 5, 12, 600)
        assert all(r.status == "no-potential" for r in recs)
        assert all(r.provenance == "rules" for r in recs)
        assert {r.ell for r in recs} == {257}

    def test_cubic_small_range(self):
        recs = cli.scan_cubic(2, 500)
        assert all(r.kind == "cyclic-cubic" for r in recs)
        assert all(len(r.class_part) % 2 == 0 for r in recs)  # even 2-rank
        for r in recs:
            assert r.status in ("full", "partial", "none", "no-potential")

    def test_jobs_parallel_matches_serial(self):
        a = cli.scan_quadratic(3, 1, 12, 1200, jobs=1)
        b = cli.scan_quadratic(3, 1, 12, 1200, jobs=2)
        strip = lambda rs: [r.row()[:7] + r.row()[8:] for r in rs]
        assert strip(a) == strip(b)

    def test_cache_resume(self, tmp_path):
        cache = str(tmp_path)
        a = cli.scan_quadratic(3, 1, 12, 1200, cache=cache)
        assert os.path.exists(cli._cache_path(cache, 3, 2))
        cached = cli._cache_load(cache, 3, 2)
        assert set(cached) == {229, 733, 1129}
        b = cli.scan_quadratic(3, 1, 12, 1200, cache=cache)
        strip = lambda rs: [r.row()[:7] + r.row()[8:] for r in rs]
        assert strip(a) == strip(b)

    def test_cached_record_reused(self, tmp_path, monkeypatch):
        cache = str(tmp_path)
        cli.scan_quadratic(3, 1, 12, 300, cache=cache)

        def boom(*a, **kw):
            raise AssertionError("should have used the cache")

        monkeypatch.setattr(cycunits, "compute_fitting_ideal", boom)
        recs = cli.scan_quadratic(3, 1, 12, 300, cache=cache)
        assert [r.ell for r in recs] == [229]

    def test_imaginary_survey(self):
        # all 31 fundamental discriminants |d| < 100 produce records;
        # the 8 trivial class groups have empty class_part
        recs = cli.survey_imaginary(100)
        assert len(recs) == 31
        assert sum(1 for r in recs if r.class_part == ()) == 8


class TestReports:
    def test_csv_empty(self):
        assert cli.report([], "csv") == ",".join(cli.CSV_COLUMNS) + "\n"

    def test_csv_roundtrip(self, tmp_path):
        recs = cli.scan_quadratic(3, 1, 12, 1200)
        path = tmp_path / "r.csv"
        cli.report(recs, "csv", path)
        assert cli.ingest_report(path) == sorted(
            recs, key=lambda r: (r.ell, str(r.p), r.kind))

    def test_json_roundtrip(self, tmp_path):
        recs = cli.scan_quadratic(3, 1, 12, 1200)
        path = tmp_path / "r.json"
        cli.report(recs, "json", path)
        assert cli.ingest_report(path) == recs

    def test_md_table_aggregates(self):
        recs = cli.scan_quadratic(3, 1, 12, 1200)
        text = cli.report(recs, "md-table")
        assert "nontrivial: 3" in text
        assert "maximal: 3" in text

    def test_byte_determinism(self):
        recs = cli.scan_quadratic(3, 1, 12, 1200)
        assert cli.report(recs, "csv") == cli.report(list(recs), "csv")
        assert cli.report(recs, "json") == cli.report(list(recs), "json")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            cli.report([], "xml")
