import csv
import io
import json
import math
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ep_spectra.cli import load_config, main
from ep_spectra.experiments import counterexample_grid, make_bump, make_fn
from ep_spectra.field_io import MAGIC, FieldFormatError, read_field, write_field
from ep_spectra.spectral_core import PeriodicGrid, ScalarField, VectorField


def spectrum_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


class TestFieldIO:
    @given(data=arrays(np.float64, (1, 16), elements=st.floats(allow_nan=False, width=64)))
    @settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    def test_roundtrip_bit_exact_1d(self, tmp_path, data):
        grid = PeriodicGrid(1, 16, 3.5)
        write_field(tmp_path / "u.field", VectorField(grid, data))
        back = read_field(tmp_path / "u.field")
        assert isinstance(back, VectorField)
        assert back.grid == grid
        assert back.samples.tobytes() == data.tobytes()

    def test_roundtrip_2d_vector_and_scalar(self, tmp_path, rng):
        grid = PeriodicGrid(2, 8, 2 * math.pi)
        u = VectorField(grid, rng.standard_normal((2, 8, 8)))
        write_field(tmp_path / "u.field", u)
        assert read_field(tmp_path / "u.field").samples.tobytes() == u.samples.tobytes()
        f = ScalarField(grid, rng.standard_normal((8, 8)))
        write_field(tmp_path / "f.field", f)
        back = read_field(tmp_path / "f.field")
        assert isinstance(back, ScalarField)
        assert back.samples.tobytes() == f.samples.tobytes()

    def _raw(self, dim=1, period=1.0, n=8, ncomp=1, payload=None, magic=MAGIC):
        header = struct.pack("<8sIdII", magic, dim, period, n, ncomp)
        if payload is None:
            payload = np.zeros(ncomp * n**dim).tobytes()
        return header + payload

    @pytest.mark.parametrize("kwargs", [
        {"n": 7}, {"n": 6}, {"n": 1}, {"dim": 0}, {"period": -1.0},
        {"ncomp": 3, "dim": 2}, {"magic": b"NOTAFILE"},
    ])
    def test_rejects_bad_header(self, tmp_path, kwargs):
        (tmp_path / "bad.field").write_bytes(self._raw(**kwargs))
        with pytest.raises(FieldFormatError):
            read_field(tmp_path / "bad.field")

    def test_rejects_truncated(self, tmp_path):
        raw = self._raw()
        (tmp_path / "short.field").write_bytes(raw[:-8])
        with pytest.raises(FieldFormatError):
            read_field(tmp_path / "short.field")
        (tmp_path / "tiny.field").write_bytes(raw[:5])
        with pytest.raises(FieldFormatError):
            read_field(tmp_path / "tiny.field")

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        grid = PeriodicGrid(1, 8, 1.0)
        write_field(tmp_path / "a.field", VectorField.zeros(grid))
        write_field(tmp_path / "a.field", VectorField.zeros(grid))
        assert sorted(p.name for p in tmp_path.iterdir()) == ["a.field"]


class TestConfig:
    def test_flat_file(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# base\ndt = 0.02\nt-final-ignored_key=1\nnx=64  # trailing\n")
        cfg = load_config(p)
        assert cfg["dt"] == "0.02" and cfg["nx"] == "64" and cfg["t_final_ignored_key"] == "1"

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("dt 0.02\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_cli_overrides_file(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("init = zero\ntfinal = 0.05\nnx = 32\n")
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(p), "--nx", "16", "--out", str(out)]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["nx"] == 16 and man["config"]["tfinal"] == 0.05

    def test_unknown_key_and_bad_value(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("nonsense = 1\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
        p.write_text("dt = fast\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_bad_flags_exit_2(self, tmp_path, capsys):
        assert main(["simulate", "--nx", "100", "--out", str(tmp_path / "o")]) == 2
        assert main(["simulate", "--init", "nosuchfile", "--out", str(tmp_path / "o")]) == 2
        assert main(["experiment", "nosuch"]) == 2
        assert main(["norms", "--out", str(tmp_path / "o")]) == 2
        assert main([]) == 2


class TestCommands:
    def test_simulate_zero(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--init", "zero", "--tfinal", "0.05", "--out", str(out)]) == 0
        rows = list(csv.DictReader(io.StringIO((out / "trajectory.csv").read_text())))
        assert len(rows) == 6
        for r in rows:
            assert float(r["f_norm"]) == 0.0 and float(r["energy"]) == 0.0
        man = json.loads((out / "manifest.json").read_text())
        assert {"config", "versions", "wall_time_s"} <= set(man)
        assert man["versions"]["numpy"] == np.__version__
        assert man["exit_code"] == 0

    def test_norms_on_fn_single_block(self, tmp_path, capsys):
        g = counterexample_grid(5, 1)
        write_field(tmp_path / "f5.field", make_fn(5, g, 2.0, make_bump(g)))
        out = tmp_path / "norms"
        assert main(["norms", "--in", str(tmp_path / "f5.field"), "--kind", "tl", "--out", str(out)]) == 0
        rows = spectrum_rows(out / "spectrum.csv")
        assert [int(r["j"]) for r in rows if float(r["blocknorm"]) != 0.0] == [5]
        printed = capsys.readouterr().out
        assert "tl norm" in printed and "j,blocknorm,weighted" in printed
        # weighted block equals 2^{ns} ||f_n|| = ||phi sin||, the same for every n
        row = next(r for r in rows if int(r["j"]) == 5)
        assert float(row["weighted"]) == pytest.approx(2**10 * float(row["blocknorm"]))

    def test_simulate_then_norms(self, tmp_path):
        sim = tmp_path / "sim"
        assert main(["simulate", "--init", "smooth", "--nx", "64", "--tfinal", "0.1", "--out", str(sim)]) == 0
        out = tmp_path / "norms"
        assert main(["norms", "--in", str(sim / "final.field"), "--index", "inf", "--out", str(out)]) == 0
        norms = json.loads((out / "norms.json").read_text())
        assert norms["besov"] > 0 and "tl" not in norms
        assert main(["norms", "--in", str(sim / "final.field"), "--kind", "tl", "--index", "inf",
                     "--out", str(out)]) == 2
        traj = list(csv.DictReader(io.StringIO((sim / "trajectory.csv").read_text())))
        assert float(traj[-1]["t"]) == pytest.approx(0.1)

    def test_simulate_from_file(self, tmp_path, rng):
        grid = PeriodicGrid(1, 64, 2 * math.pi)
        x = grid.axis_coordinates
        write_field(tmp_path / "u0.field", VectorField(grid, 0.1 * np.cos(x)[None]))
        out = tmp_path / "sim"
        assert main(["simulate", "--init", str(tmp_path / "u0.field"), "--tfinal", "0.05", "--out", str(out)]) == 0
        assert read_field(out / "final.field").grid == grid

    def test_blowup_exit_3(self, tmp_path):
        out = tmp_path / "blow"
        code = main(["simulate", "--init", "smooth", "--amplitude", "3", "--nx", "128",
                     "--tfinal", "5", "--blowup", "2.5", "--out", str(out)])
        assert code == 3
        rep = json.loads((out / "report.json").read_text())
        assert not rep["passed"]
        assert (out / "trajectory.csv").exists()
        assert json.loads((out / "manifest.json").read_text())["exit_code"] == 3

    def test_prop31_experiment(self, tmp_path):
        out = tmp_path / "p31"
        assert main(["experiment", "prop31", "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["summary"]["second_order_slope"] >= 1.9
        assert (out / "report.csv").read_text().startswith("t,")

    def test_manifest_rerun_reproduces(self, tmp_path):
        first = tmp_path / "a"
        assert main(["experiment", "rllimit", "--n-max", "5", "--out", str(first)]) == 0
        second = tmp_path / "b"
        assert main(["experiment", "rllimit", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
        assert (first / "report.csv").read_text() == (second / "report.csv").read_text()
        a = json.loads((first / "report.json").read_text())
        b = json.loads((second / "report.json").read_text())
        assert a["rows"] == b["rows"] and a["summary"] == b["summary"]

    def test_env_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EP_SPECTRA_OUT", str(tmp_path / "root"))
        assert main(["simulate", "--init", "zero", "--tfinal", "0.02", "--threads", "2"]) == 0
        man = json.loads((tmp_path / "root" / "simulate" / "manifest.json").read_text())
        assert man["config"]["threads"] == 2

    def test_other_experiments_run(self, tmp_path):
        out = tmp_path / "cd"
        assert main(["experiment", "contdep", "--nx", "128", "--k-max", "30", "--tfinal", "0.2",
                     "--out", str(out)]) == 0
        assert json.loads((out / "report.json").read_text())["name"] == "contdep"
        out = tmp_path / "pc"
        assert main(["experiment", "picard", "--nx", "256", "--k-max", "48", "--iters", "4",
                     "--slope-max", "3", "--compare-n", "3", "--tfinal", "0.2", "--out", str(out)]) == 0
        assert len(json.loads((out / "report.json").read_text())["rows"]) == 4
        out = tmp_path / "nu"
        assert main(["experiment", "nonuniform", "--n-min", "3", "--n-max", "4", "--t-probe", "0.25",
                     "--rl-check", "false", "--out", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["parameters"]["t_probe"] == 0.25
