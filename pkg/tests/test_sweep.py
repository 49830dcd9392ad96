import pytest

from gradecho.metrics import compute_echo_metrics
from gradecho.solver import integrate
from gradecho.sweep import (PointResult, SweepSpec, get_scenario_field,
                            run_sweep, set_scenario_field)

from .conftest import small_scenario


def _spec(tmp_path=None, workers=1, xis=(20.0, 50.0)):
    return SweepSpec(
        base=small_scenario(),
        axes=(("medium.xi", xis),),
        workers=workers,
        checkpoint=None if tmp_path is None else str(tmp_path / "ckpt.jsonl"),
        efficiency_cut=0.8,
        detect_after=0.8,
    )


def test_field_path_resolution():
    s = small_scenario()
    assert get_scenario_field(s, "medium.xi") == 50.0
    s2 = set_scenario_field(s, "medium.xi", 80.0)
    assert s2.medium.xi == 80.0
    assert s.medium.xi == 50.0  # original untouched
    with pytest.raises(KeyError):
        get_scenario_field(s, "medium.bogus")


def test_spec_rejects_bad_axis_before_running():
    with pytest.raises(KeyError):
        SweepSpec(base=small_scenario(), axes=(("probe.nope", (1.0,)),))
    with pytest.raises(ValueError):
        SweepSpec(base=small_scenario(), axes=())


def test_singleton_grid_matches_direct_call():
    spec = _spec(xis=(50.0,))
    result = run_sweep(spec)
    assert len(result.rows) == 1
    row = result.rows[0]
    rec = integrate(small_scenario())
    m = compute_echo_metrics(rec, after=0.8, t_cut=0.8)
    assert row.error is None
    assert row.metrics["efficiency_R"] == pytest.approx(m.efficiency_R, rel=1e-12)
    assert row.metrics["echo_peak_time"] == pytest.approx(m.echo_peak_time, rel=1e-12)


def test_worker_count_does_not_change_results(tmp_path):
    r1 = run_sweep(_spec())
    r2 = run_sweep(SweepSpec(base=small_scenario(), axes=(("medium.xi", (20.0, 50.0)),),
                             workers=2, efficiency_cut=0.8, detect_after=0.8))
    csv1 = tmp_path / "a.csv"
    csv2 = tmp_path / "b.csv"
    r1.to_csv(csv1)
    r2.to_csv(csv2)
    assert csv1.read_bytes() == csv2.read_bytes()


def test_resume_is_bit_identical(tmp_path):
    full_dir = tmp_path / "full"
    full_dir.mkdir()
    full = run_sweep(_spec(full_dir))

    # simulate an interrupted sweep: checkpoint holds only the first point
    part_dir = tmp_path / "part"
    part_dir.mkdir()
    spec = _spec(part_dir)
    first = run_sweep(SweepSpec(base=spec.base, axes=(("medium.xi", (20.0,)),),
                                efficiency_cut=0.8, detect_after=0.8))
    ckpt = part_dir / "ckpt.jsonl"
    ckpt.write_text(first.rows[0].to_json() + "\n", encoding="utf-8")

    resumed = run_sweep(spec)
    a = tmp_path / "full.csv"
    b = tmp_path / "resumed.csv"
    full.to_csv(a)
    resumed.to_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_failed_point_recorded_not_fatal():
    # xi < 0 fails MediumParams construction inside the point
    spec = SweepSpec(base=small_scenario(), axes=(("medium.xi", (50.0, -5.0)),),
                     efficiency_cut=0.8, detect_after=0.8)
    result = run_sweep(spec)
    assert result.rows[0].error is None
    assert result.rows[1].error is not None
    assert result.rows[1].metrics is None


def test_no_flip_point_marked_no_echo():
    spec = SweepSpec(base=small_scenario(flip=False),
                     axes=(("medium.xi", (50.0,)),))
    row = run_sweep(spec).rows[0]
    assert row.metrics is None
    assert row.flags.get("no_echo") is True


def test_point_result_json_roundtrip():
    r = PointResult(index=3, values={"medium.xi": 50.0},
                    metrics={"efficiency_R": 0.5}, flags={"dispersion": False},
                    error=None)
    assert PointResult.from_json(r.to_json()) == r


def test_dispersion_flag_reference_points():
    # distortion marker on the linear-gradient storage protocol: broadened
    # echo at (xi, zeta) = (4000, 500), clean at (2000, 4000)
    from gradecho.scenarios import builtin_sweep
    from gradecho.sweep import dispersion_flag

    spec = builtin_sweep("fig4a-coarse")
    flags = {}
    for xi, zeta in ((4000.0, 500.0), (2000.0, 4000.0)):
        scenario = set_scenario_field(
            set_scenario_field(spec.base, "medium.xi", xi), "profile.zeta", zeta)
        rec = integrate(scenario, check=False)
        m = compute_echo_metrics(rec, after=0.075, t_cut=0.065)
        flags[(xi, zeta)] = dispersion_flag(m)
    assert flags[(4000.0, 500.0)] is True
    assert flags[(2000.0, 4000.0)] is False
