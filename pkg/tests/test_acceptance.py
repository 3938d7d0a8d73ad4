"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with -s to see them all).  The
expensive simulations are shared through module-scoped fixtures; criterion 8
additionally audits the KCL mismatch of every network solve those runs made.
"""

import time
from math import pi, sin

import numpy as np
import pytest

import phasedyn
from phasedyn import engine, metrics, netmodel
from phasedyn.engine import EngineConfig
from phasedyn.frames import (
    OMEGA_S,
    Phasor,
    SamplePair,
    SingularSampling,
    ThreePhasePhasor,
    phasor_to_instant,
    recover_phasor,
)
from phasedyn.powerflow import solve_network
from reference_smib import speed_deviation_trace

DT = 1.0 / 240.0

# (label, network_mismatch_max) of every engine run made by this module
SOLVE_AUDIT = []


def _report(num, ok, detail):
    print("ACCEPTANCE %d: %s (%s)" % (num, "PASS" if ok else "FAIL", detail))
    assert ok, detail


def _run(fixture, scenario, duration, label, dt=DT, eps=None, record=None):
    net = netmodel.load_network(phasedyn.fixture_path(fixture))
    events = []
    if scenario is not None:
        events, meta = engine.parse_scenario(phasedyn.fixture_path(scenario))
        if record is None:
            record = meta.get("record")
    kw = {} if eps is None else {"eps": eps}
    cfg = EngineConfig(duration=duration, dt=dt, record=record, **kw)
    stats = {}
    series = engine.run(net, cfg, events, stats=stats)
    SOLVE_AUDIT.append((label, stats["network_mismatch_max"]))
    return series


@pytest.fixture(scope="module")
def case1_step_pair():
    a = _run("ieee39.json", "scenarios/ieee39_case1.json", 20.0, "case1 dt")
    b = _run("ieee39.json", "scenarios/ieee39_case1.json", 20.0, "case1 dt/2", dt=DT / 2.0)
    return a, b


@pytest.fixture(scope="module")
def case1_eps_pair():
    a = _run("ieee39.json", "scenarios/ieee39_case1.json", 2.0, "case1 eps/20", eps=DT / 20.0)
    b = _run("ieee39.json", "scenarios/ieee39_case1.json", 2.0, "case1 eps/100", eps=DT / 100.0)
    return a, b


@pytest.fixture(scope="module")
def smib_balanced_run():
    return _run("smib.json", "scenarios/smib_balanced_step.json", 2.0, "smib balanced step")


@pytest.fixture(scope="module")
def smib_phase_a_run():
    return _run("smib.json", "scenarios/smib_phase_a_step.json", 6.0, "smib phase-A step")


@pytest.fixture(scope="module")
def two_feeder_run():
    return _run("two_feeder_substation.json", "scenarios/two_feeder_fault.json", 4.0,
                "two-feeder fault")


@pytest.fixture(scope="module")
def steady_runs():
    return {
        name: _run(name + ".json", None, 5.0, name + " steady")
        for name in ("smib", "two_feeder_substation", "ieee39")
    }


def test_criterion_1_phasor_recovery_suite():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_mag = worst_ang = 0.0
    n = 0
    while n < 10000:
        mag = 10.0 * (1.0 - rng.random())            # (0, 10]
        ang = rng.uniform(-pi, pi)
        t1 = rng.uniform(0.0, 1.0)
        dt = rng.uniform(1e-5, 1.0 / 120.0 - 1e-5)
        if abs(sin(OMEGA_S * dt)) < 1e-3:
            continue
        ph = Phasor(mag, ang)
        rec = recover_phasor(SamplePair(
            phasor_to_instant(ph, t1), phasor_to_instant(ph, t1 + dt), t1, t1 + dt))
        worst_mag = max(worst_mag, abs(rec.magnitude - mag))
        worst_ang = max(worst_ang, abs(np.angle(np.exp(1j * (rec.angle - ang)))))
        n += 1
    elapsed = time.perf_counter() - t0

    singular_ok = True
    for npi in range(4):
        for off in (0.5e-6, 1e-6, -1e-6):
            arg = npi * pi + off
            if arg <= 0:
                continue
            dt = arg / OMEGA_S
            try:
                recover_phasor(SamplePair(0.1, 0.2, 0.5, 0.5 + dt))
                singular_ok = False
            except SingularSampling:
                pass
    ok = worst_mag < 1e-9 and worst_ang < 1e-9 and elapsed < 5.0 and singular_ok
    _report(1, ok, "max err mag %.2e ang %.2e, %.2f s, singular pairs %s"
            % (worst_mag, worst_ang, elapsed, "raise" if singular_ok else "MISSED"))


def test_criterion_2_balanced_equivalence_oracle(smib_balanced_run):
    ts = smib_balanced_run
    oracle = speed_deviation_trace(
        phasedyn.fixture_path("smib.json"), ts.time, step_time=0.2, step_scale=2.0)
    pair = metrics.TrajectoryPair(ts["gen.G1.speed_dev_hz"], oracle, DT)
    r = metrics.rmse(pair)
    c = metrics.correlation(pair)
    ok = r < 1e-3 and c > 0.999
    _report(2, ok, "speed RMSE %.2e Hz (< 1e-3), corr %.6f (> 0.999)" % (r, c))


def test_criterion_3_unbalance_signature(smib_phase_a_run):
    ts = smib_phase_a_run
    m = ts.time >= 4.0
    f = metrics.dominant_frequency(ts["gen.G1.speed_dev_hz"][m], DT)
    ok = 118.0 <= f <= 122.0
    _report(3, ok, "dominant rotor-speed component %.2f Hz (in [118, 122])" % f)


def test_criterion_4_epsilon_robustness(case1_eps_pair):
    a, b = case1_eps_pair
    worst_v = worst_s = 0.0
    for col in a.columns():
        r = metrics.rmse(metrics.TrajectoryPair(a[col], b[col], DT))
        if col.endswith("vmag_pu"):
            worst_v = max(worst_v, r)
        elif col.endswith("speed_dev_hz"):
            worst_s = max(worst_s, r)
    ok = worst_v < 1e-4 and worst_s < 1e-4
    _report(4, ok, "eps dt/20 vs dt/100: vmag RMSE %.2e pu, speed RMSE %.2e Hz (< 1e-4)"
            % (worst_v, worst_s))


def test_criterion_5_self_convergence(case1_step_pair):
    a, b = case1_step_pair
    worst_rmse = worst_drift = 0.0
    for col in a.columns():
        if not col.endswith("speed_dev_hz"):
            continue
        sa, sb = a[col], b[col][::2]
        worst_rmse = max(worst_rmse, metrics.rmse(metrics.TrajectoryPair(sa, sb, DT)))
        tail = sa[a.time >= a.time[-1] - 1.0]
        worst_drift = max(worst_drift, float(np.max(tail) - np.min(tail)))
    ok = worst_rmse < 5e-4 and worst_drift < 1e-3
    _report(5, ok, "dt vs dt/2 speed RMSE %.2e Hz (< 5e-4); final 1 s drift %.2e Hz (< 1e-3)"
            % (worst_rmse, worst_drift))


def test_criterion_6_fault_restoration(two_feeder_run):
    ts = two_feeder_run
    t = ts.time
    clear_t, reclose_t = 60.0 / 60.0, 90.0 / 60.0
    dead_mask = (t > clear_t + 1e-9) & (t < reclose_t - 1e-9)
    dead_ok = True
    for bus in ("M2", "F2H", "F2M", "F2E"):
        for ph in "ABC":
            if np.max(np.abs(ts["bus.%s.%s.vmag_pu" % (bus, ph)][dead_mask])) != 0.0:
                dead_ok = False

    pre_idx = int(round((50.0 / 60.0) / DT)) - 1
    settle = t >= reclose_t + 2.0
    worst_v = 0.0
    for col in ts.columns():
        if col.endswith("vmag_pu"):
            worst_v = max(worst_v, float(np.max(np.abs(ts[col][settle] - ts[col][pre_idx]))))
    sd = ts["gen.G1.speed_dev_hz"]
    worst_s = float(np.max(np.abs(sd[settle] - sd[pre_idx])))
    ok = dead_ok and worst_v < 1e-3 and worst_s < 1e-3
    _report(6, ok, "dead-window zeros %s; post-reclose dV %.2e pu, dspeed %.2e Hz (< 1e-3)"
            % ("exact" if dead_ok else "VIOLATED", worst_v, worst_s))


def test_criterion_7_steady_state_hold(steady_runs):
    worst_speed = worst_dv = 0.0
    for name, ts in steady_runs.items():
        for col in ts.columns():
            if col.endswith("speed_dev_hz"):
                dev = np.max(np.abs(ts[col])) * 2.0 * pi      # rad/s
                worst_speed = max(worst_speed, dev)
            elif col.endswith("vmag_pu"):
                worst_dv = max(worst_dv, float(np.max(ts[col]) - np.min(ts[col])))
    ok = worst_speed < 1e-6 * OMEGA_S and worst_dv < 1e-6
    _report(7, ok, "5 s hold: max speed dev %.2e rad/s (< %.1e), max dV %.2e pu (< 1e-6)"
            % (worst_speed, 1e-6 * OMEGA_S, worst_dv))


def test_criterion_8_solver_correctness(case1_step_pair, case1_eps_pair, smib_balanced_run,
                                        smib_phase_a_run, two_feeder_run, steady_runs):
    worst = max(m for _, m in SOLVE_AUDIT)
    divider = netmodel.parse_network({
        "mva_base": 100.0,
        "buses": [{"id": "S", "base_kv": 12.47, "phases": "A"},
                  {"id": "L", "base_kv": 12.47, "phases": "A"}],
        "branches": [{"id": "F", "from": "S", "to": "L", "phases": "A", "z_self": [0.0, 0.1]}],
        "loads": [{"bus": "L", "p_mw": 100.0 / 3.0, "q_mvar": 0.0, "zip": [1, 0, 0]}],
        "sources": [{"bus": "S", "v_pu": 1.0}],
    })
    sol = solve_network(divider, {"S": ThreePhasePhasor(a=Phasor(1.0, 0.0))})
    v = sol.voltages["L"].a.to_complex()
    err = abs(v - 1.0 / (1.0 + 0.1j))
    ok = worst < 1e-8 and err < 1e-9
    _report(8, ok, "KCL residual %.2e over %d runs (< 1e-8); divider error %.2e (< 1e-9)"
            % (worst, len(SOLVE_AUDIT), err))


def test_criterion_9_runtime_target():
    t0 = time.perf_counter()
    _run("ieee39.json", "scenarios/ieee39_case1.json", 5.0, "runtime probe")
    elapsed = time.perf_counter() - t0
    ok = elapsed < 60.0
    _report(9, ok, "39-bus, 5 s at 4 samples/cycle: %.1f s wall (< 60 s)" % elapsed)
