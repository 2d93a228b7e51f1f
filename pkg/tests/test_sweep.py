import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npblockade import cli
from npblockade import models as md
from npblockade import sweep as sw
from npblockade.errors import ConfigError, ContractError, UnsupportedModelError
from npblockade.observables import CorrelationReport

FIG1B = """\
model.kind = jc
model.g = 17.3205
model.gamma = 0.1
drive.kind = parametric
drive.order = 3
drive.amplitude = 0.3   # lambda
sweep.parameter = delta
sweep.start = -15
sweep.stop = 15
sweep.count = 301
"""

KERR_SMALL = """\
model.kind = kerr
model.U = 10
model.cavity_dim = 14
drive.kind = parametric
drive.order = 3
drive.amplitude = {amp}
sweep.parameter = delta
sweep.start = -22
sweep.stop = -18
sweep.count = {count}
truncation.max_dim = 18
output.orders = 2,3,4
"""


def kerr_spec(amp=0.1, count=9):
    return sw.parse_config(KERR_SMALL.format(amp=amp, count=count))


def fake_result(flags, order=3, values=None):
    """Hand-built result: rows where ``flags`` is true classify as n-photon blockade."""
    rows = []
    values = values if values is not None else np.arange(len(flags), dtype=float)
    for k, (v, f) in enumerate(zip(values, flags)):
        rep = CorrelationReport("a", {order: 2.0 + k if f else 0.5, order + 1: 0.1}, 1.0, 0.0)
        rows.append(sw.PointResult(float(v), {"a": rep}, 1e-12, 1e9, 0.0, {"a": 10}, True))
    return sw.SweepResult("delta", (order, order + 1), rows)


# -- configuration ---------------------------------------------------------------------


def test_fig1b_config_is_valid():
    spec = sw.parse_config(FIG1B)
    assert isinstance(spec.model, md.JCParams)
    assert spec.model.g == 17.3205 and spec.model.gamma == 0.1
    assert spec.model.drive == md.parametric(3, 0.3)
    assert spec.sweep == sw.SweepAxis("delta", -15.0, 15.0, 301)
    assert spec.orders == (3, 4) and spec.tail_tol == 1e-8
    assert spec.model.cavity_dim == 12  # default truncation
    assert spec.sweep.step == pytest.approx(0.1)


@pytest.mark.parametrize("edit,key", [
    (("sweep.count = 301", "sweep.count = 1"), "sweep.count"),
    (("drive.amplitude = 0.3", "drive.amplitude = -0.3"), "drive.amplitude"),
    (("model.gamma = 0.1", "model.gamma = 0.1\nmodel.bogus = 1"), "model.bogus"),
    (("model.g = 17.3205\n", ""), "model.g"),
    (("drive.order = 3", "drive.order = 1"), "drive.order"),
    (("sweep.stop = 15", "sweep.stop = -20"), "sweep.stop"),
    (("sweep.count = 301", "sweep.count = many"), "sweep.count"),
    (("model.kind = jc", "model.kind = laser"), "model.kind"),
    (("sweep.parameter = delta", "sweep.parameter = cavity_dim"), "sweep.parameter"),
    (("model.gamma = 0.1", "model.gamma = 0.1\noutput.orders = 3,9"), "output.orders"),
    (("model.gamma = 0.1", "model.gamma = -0.1"), "model"),
])
def test_config_errors_carry_key_path(edit, key):
    text = FIG1B.replace(*edit)
    with pytest.raises(ConfigError) as exc:
        sw.parse_config(text)
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_config_amplitude_sweep_log_scale():
    text = FIG1B.replace("sweep.parameter = delta", "sweep.parameter = lambda").replace(
        "sweep.start = -15", "sweep.start = 0.01").replace("sweep.stop = 15", "sweep.stop = 1").replace(
        "sweep.count = 301", "sweep.count = 61\nsweep.scale = log\nmodel.delta = 10")
    spec = sw.parse_config(text)
    grid = spec.sweep.grid()
    assert spec.sweep.parameter == "amplitude"
    assert grid[0] == pytest.approx(0.01) and grid[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(np.log(grid)), np.log(100) / 60)
    assert spec.params_at(0.5).drive.amplitude == 0.5


def test_bundled_configs_parse():
    names = sw.bundled_configs()
    for required in ("fig1b.cfg", "fig1c.cfg", "fig2bc.cfg", "fig2de_parametric.cfg",
                     "fig2de_coherent.cfg", "fig3.cfg", "fig4.cfg"):
        assert required in names
    for name in names:
        spec = sw.load_config(name)
        assert spec.sweep is not None and spec.sweep.count >= 2


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        sw.load_config(tmp_path / "nope.cfg")


# -- sweeps ----------------------------------------------------------------------------


def test_zero_drive_rows_are_undefined():
    result = sw.run_sweep(kerr_spec(amp=0.0, count=5))
    for row in result.rows:
        rep = row.reports["a"]
        assert rep.mean_n <= 1e-12
        assert all(math.isnan(g) for g in rep.g.values())
    assert sw.find_blockade_windows(result, 3) == []


def test_sweep_rows_sorted_and_valid():
    spec = kerr_spec()
    result = sw.run_sweep(spec)
    assert len(result.rows) == spec.sweep.count
    assert np.all(np.diff(result.values) > 0)
    for row in result.rows:
        assert row.valid
        assert row.residual <= 1e-9
        assert row.reports["a"].fock_tail <= spec.tail_tol


def test_worker_count_does_not_change_results():
    spec = kerr_spec(count=7)
    one, two = sw.run_sweep(spec, workers=1), sw.run_sweep(spec, workers=3)
    for r1, r2 in zip(one.rows, two.rows):
        assert r1.value == r2.value
        assert r1.reports["a"].g == r2.reports["a"].g
        assert (r1.residual, r1.dims, r1.valid) == (r2.residual, r2.dims, r2.valid)


def test_truncation_escalation():
    # a strong coherent drive overflows dim 6 and must grow
    p = md.KerrParams(0.0, 1.0, md.coherent(2.0), cavity_dim=6)
    row = sw.solve_point(p, (2, 3), max_dim=40)
    assert row.valid and row.dims["a"] > 6
    capped = sw.solve_point(p, (2, 3), max_dim=6)
    assert not capped.valid and "Fock tail" in capped.error


def test_kerr_window_at_prediction():
    result = sw.run_sweep(kerr_spec(count=41))
    (w,) = sw.find_blockade_windows(result, 3)
    assert w.contains(md.kerr_blockade_detuning(3, 10.0))


def test_window_grid_refinement_kerr():
    coarse = sw.find_blockade_windows(sw.run_sweep(kerr_spec(count=21)), 3)
    fine = sw.find_blockade_windows(sw.run_sweep(kerr_spec(count=41)), 3)
    step = 4.0 / 20
    assert len(coarse) == len(fine) == 1
    assert abs(coarse[0].start - fine[0].start) < step
    assert abs(coarse[0].stop - fine[0].stop) < step


# -- windows ---------------------------------------------------------------------------


def test_windows_empty():
    assert sw.find_blockade_windows(fake_result([False] * 6), 3) == []


def test_single_point_window():
    (w,) = sw.find_blockade_windows(fake_result([False, False, True, False]), 3)
    assert w.start == w.stop == w.peak == 2.0
    assert w.start_index == w.stop_index == 2


def test_windows_split_and_peak():
    ws = sw.find_blockade_windows(fake_result([True, True, False, True, True, True]), 3)
    assert [(w.start, w.stop) for w in ws] == [(0.0, 1.0), (3.0, 5.0)]
    assert ws[1].peak == 5.0  # g(3) grows with index in the fake data


def test_invalid_rows_excluded():
    res = fake_result([True, True, True])
    res.rows[1].valid = False
    assert len(sw.find_blockade_windows(res, 3)) == 2
    assert len(sw.find_blockade_windows(res, 3, valid_only=False)) == 1


def test_windows_need_both_orders():
    with pytest.raises(ContractError):
        sw.find_blockade_windows(fake_result([True]), 4)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=30))
def test_windows_partition_true_runs(flags):
    ws = sw.find_blockade_windows(fake_result(flags), 3)
    covered = np.zeros(len(flags), bool)
    for w in ws:
        assert w.start_index <= w.stop_index
        covered[w.start_index:w.stop_index + 1] = True
        assert w.start_index == 0 or not flags[w.start_index - 1]
        assert w.stop_index == len(flags) - 1 or not flags[w.stop_index + 1]
    assert covered.tolist() == flags


# -- CSV -------------------------------------------------------------------------------


HEADER = "sweep_value,mode,mean_n,g2,g3,g4,g5,fock_tail,residual,gap_ratio,dim,valid"


def test_csv_header_only_for_empty_result(tmp_path):
    path = sw.emit_csv(sw.SweepResult("delta", (3, 4), []), tmp_path / "e.csv")
    assert path.read_bytes() == (HEADER + "\n").encode()


def test_csv_round_trip(tmp_path):
    result = sw.run_sweep(kerr_spec(count=5))
    path = sw.emit_csv(result, tmp_path / "r.csv")
    raw = path.read_bytes()
    assert raw.startswith((HEADER + "\n").encode()) and b"\r" not in raw
    back = sw.read_csv(path)
    assert len(back) == 5
    for row, rec in zip(result.rows, back):
        rep = row.reports["a"]
        assert rec["sweep_value"] == float(f"{row.value:.12g}")
        assert rec["mode"] == "a" and rec["valid"] is True and rec["dim"] == row.dims["a"]
        assert rec["g5"] is None
        for n in (2, 3, 4):
            assert rec[f"g{n}"] == pytest.approx(rep.g[n], rel=1e-11)
        assert rec["mean_n"] == pytest.approx(rep.mean_n, rel=1e-11)


def test_csv_nan_marker(tmp_path):
    result = sw.run_sweep(kerr_spec(amp=0.0, count=2))
    back = sw.read_csv(sw.emit_csv(result, tmp_path / "z.csv"))
    assert all(math.isnan(r["g3"]) for r in back)


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_csv_number_format_lossless_12_digits(x):
    assert float(sw._fmt(x)) == float(f"{x:.12g}")


def test_csv_unwritable_path(tmp_path):
    with pytest.raises(OSError) as exc:
        sw.emit_csv(sw.SweepResult("delta", (3, 4), []), tmp_path / "missing" / "x.csv")
    assert "missing" in str(exc.value)


# -- analytic conditions -----------------------------------------------------------------


def _spec_for(kind_text):
    return sw.parse_config(kind_text)


def test_conditions_jc():
    p = md.JCParams(0.0, 10 * math.sqrt(3), 0.1, md.parametric(3, 0.3))
    vals = [v for _, v in sw.conditions(p)]
    assert vals == pytest.approx([-10.0, 10.0], abs=1e-12)


def test_conditions_kerr():
    p = md.KerrParams(0.0, 10.0, md.parametric(4, 0.1), cavity_dim=20)
    assert [v for _, v in sw.conditions(p)] == [-30.0]


def test_conditions_coupled():
    p = md.CoupledKerrParams(0.0, 10.0, 5.0, md.parametric(2, 0.5))
    vals = [v for _, v in sw.conditions(p)]
    assert vals == pytest.approx([-12.0710678118655, -10.0, 2.0710678118655, 4.14213562373095,
                                  24.142135623731], abs=1e-9)


def test_conditions_coupled_higher_order_unsupported():
    p = md.CoupledKerrParams(0.0, 10.0, 5.0, md.parametric(3, 0.5))
    with pytest.raises(UnsupportedModelError):
        sw.conditions(p)


# -- CLI ---------------------------------------------------------------------------------


def write_cfg(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_sweep_writes_csv(tmp_path, capsys):
    cfg = write_cfg(tmp_path, KERR_SMALL.format(amp=0.1, count=5))
    out = tmp_path / "o.csv"
    assert cli.main(["sweep", cfg, "--out", str(out), "--orders", "3,4"]) == 0
    assert len(out.read_text().splitlines()) == 6
    assert "3-photon blockade" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FIG1B.replace("sweep.count = 301", "sweep.count = 1"))
    assert cli.main(["sweep", cfg, "--out", str(tmp_path / "x.csv")]) == 1
    assert "sweep.count" in capsys.readouterr().err


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    # an unreachable tail tolerance marks every row invalid
    cfg = write_cfg(tmp_path, KERR_SMALL.format(amp=0.1, count=3) + "truncation.tail_tol = 1e-300\n")
    assert cli.main(["sweep", cfg, "--out", str(tmp_path / "x.csv")]) == 2
    assert "failed numerical checks" in capsys.readouterr().err


def test_cli_point_and_conditions(tmp_path, capsys):
    cfg = write_cfg(tmp_path, KERR_SMALL.format(amp=0.1, count=5))
    assert cli.main(["point", cfg, "--value", "-20"]) == 0
    out = capsys.readouterr().out
    assert "g(3)(0)" in out and "valid = True" in out
    assert cli.main(["conditions", cfg]) == 0
    assert "-30.000000" not in capsys.readouterr().out


def test_cli_conditions_unsupported(tmp_path, capsys):
    text = (
        "model.kind = coupled_kerr\nmodel.U = 10\nmodel.J = 5\nmodel.delta = 0\n"
        "drive.kind = parametric\ndrive.order = 3\ndrive.amplitude = 0.5\n")
    assert cli.main(["conditions", write_cfg(tmp_path, text)]) == 1
    assert "not implemented" in capsys.readouterr().err


def test_cli_spectrum(capsys):
    assert cli.main(["spectrum", "fig3.cfg", "--levels", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()[1:]
    diffs = [float(l.split()[-1]) for l in lines if l.split()[-1] != "-"]
    assert len(lines) == 6 and max(diffs) <= 1e-10


def test_cli_dim_override(tmp_path, capsys):
    cfg = write_cfg(tmp_path, KERR_SMALL.format(amp=0.1, count=5))
    assert cli.main(["point", cfg, "--value", "-20", "--dim", "10"]) == 0
    assert "dim = 10" in capsys.readouterr().out
    assert cli.main(["point", cfg, "--dim", "3"]) == 1
