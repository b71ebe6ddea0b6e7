import math

import pytest

import condmem


def small_config(trials=200_000, seed=7):
    c = condmem.measured_config()
    c.set("ensemble.p1", 0.01)
    c.set("control.n_max", 5)
    c.n_trials = trials
    c.seed = seed
    return c


def test_oracles():
    assert condmem.visibility_from_w(0.17) == pytest.approx(1 / 1.17, abs=1e-12)
    assert condmem.cross_trial_ratio(0.085, 0.17) == pytest.approx(0.5686, abs=1e-4)
    assert condmem.p11_exact(0.0012, 1) == pytest.approx(1.44e-6)
    assert condmem.enhancement_f11(0.0012, 23) == pytest.approx(44.4, abs=0.01)
    assert condmem.p22c_model(0.091, 18, 0) == pytest.approx(0.0041405)


def test_config_round_trip():
    c = condmem.measured_config()
    again = condmem.parse_config(str(c))
    assert again == c
    assert again.hash() == c.hash()
    with pytest.raises(condmem.InvalidConfig):
        c.set("ensemble.bogus", 1)


def test_run_and_estimate():
    res = condmem.run(small_config())
    counters = res.counters
    assert counters["trials"] == 200_000
    assert condmem.armed_trials(res.log) == counters["armed_trials"]
    est = condmem.estimate_p11(res.log, 5)
    exact = condmem.p11_exact(0.01, 5)
    assert abs(est.value - exact) < 4 * math.sqrt(exact / est.denominator)


def test_shards_do_not_change_the_log():
    a = small_config()
    b = small_config()
    b.shards = 4
    b.threads = 2
    assert condmem.run(a).log == condmem.run(b).log


def test_log_file_round_trip(tmp_path):
    log = condmem.run(small_config(50_000)).log
    path = tmp_path / "events.log"
    log.save(str(path))
    assert condmem.load_event_log(str(path)) == log
    assert path.read_text().startswith("# condmem ")


def test_fit_recovers_gaussian():
    xs = [float(x) for x in range(-40, 41, 2)]
    ys = [condmem.coincidence_density(x, 100.0, 18.4) for x in xs]
    r = condmem.fit("gaussian", xs, ys, sigma=[1.0] * len(xs))
    assert r.param("T") == pytest.approx(18.4, abs=1e-9)
    assert r.param("p0") == pytest.approx(100.0, abs=1e-9)


def test_reproduce_small_scale():
    rep = condmem.reproduce("fig4", 0.01)
    assert rep["figure"] == "fig4"
    assert rep["passed"]
    assert all("line" in c for c in rep["checks"])


def test_shipped_config_matches_builtin():
    from pathlib import Path

    path = Path(__file__).resolve().parents[2] / "configs" / "measured.cfg"
    assert condmem.load_config(str(path)).hash() == condmem.measured_config().hash()
