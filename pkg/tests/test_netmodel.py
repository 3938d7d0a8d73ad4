import json

import numpy as np
import pytest

from phasedyn import netmodel
from phasedyn.netmodel import (
    ParseError,
    ValidationError,
    apply_switch_action,
    energized_islands,
    load_network,
    parse_network,
    s_phase_to_mva,
    s_phase_to_pu,
    zbase_ohm,
)

MINIMAL = {
    "mva_base": 100.0,
    "buses": [
        {"id": "SRC", "base_kv": 12.47},
        {"id": "LOAD", "base_kv": 12.47},
    ],
    "branches": [
        {"id": "L1", "from": "SRC", "to": "LOAD", "z1": [0.01, 0.05], "z0": [0.03, 0.15]}
    ],
    "loads": [{"bus": "LOAD", "p_mw": 3.0, "q_mvar": 1.0, "zip": [1.0, 0.0, 0.0]}],
    "sources": [{"bus": "SRC", "v_pu": 1.0}],
}


def test_minimal_two_bus_network():
    net = parse_network(MINIMAL)
    assert len(net.buses) == 2
    assert len(net.branches) == 1
    assert len(net.loads) == 1
    # balanced shorthand splits across phases, in per-unit on mva/3
    s = net.loads[0].s_nom["A"]
    assert s.real == pytest.approx(0.03)   # (3 MW / 3 phases) / (100/3 MVA)
    assert s.imag == pytest.approx(0.01)


def test_ieee39_counts(ieee39_net):
    assert len(ieee39_net.buses) == 39
    assert len(ieee39_net.branches) == 34
    assert len(ieee39_net.transformers) == 12
    assert len(ieee39_net.loads) == 19
    assert len(ieee39_net.machines) == 10


def test_unknown_bus_reference_names_the_id():
    bad = json.loads(json.dumps(MINIMAL))
    bad["loads"][0]["bus"] = "NOWHERE"
    with pytest.raises(ValidationError, match="NOWHERE"):
        parse_network(bad)


def test_zip_fractions_must_sum_to_one():
    bad = json.loads(json.dumps(MINIMAL))
    bad["loads"][0]["zip"] = [0.5, 0.5, 0.1]
    with pytest.raises(ValidationError, match="LOAD"):
        parse_network(bad)


def test_malformed_file_is_a_parse_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_network(str(p))


def test_sequence_impedance_conversion():
    net = parse_network(MINIMAL)
    z = net.branches[0].z
    z1, z0 = complex(0.01, 0.05), complex(0.03, 0.15)
    assert z[0, 0] == pytest.approx((z0 + 2 * z1) / 3.0)
    assert z[0, 1] == pytest.approx((z0 - z1) / 3.0)
    assert np.allclose(z, z.T)


def test_asymmetric_branch_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["branches"][0] = {
        "id": "L1", "from": "SRC", "to": "LOAD",
        "z_abc": [[[0.1, 0.2], [0.0, 0.0], [0.0, 0.0]],
                   [[0.01, 0.0], [0.1, 0.2], [0.0, 0.0]],
                   [[0.0, 0.0], [0.0, 0.0], [0.1, 0.2]]],
    }
    with pytest.raises(ValidationError, match="symmetric"):
        parse_network(bad)


def test_per_unit_round_trip():
    rng = np.random.default_rng(23)
    for _ in range(100):
        p, q, base = rng.uniform(0.1, 500), rng.uniform(-200, 200), rng.uniform(1, 1000)
        s = s_phase_to_pu(p, q, base)
        p2, q2 = s_phase_to_mva(s, base)
        assert abs(p2 - p) < 1e-12 * abs(p)
        assert abs(q2 - q) < 1e-12 * max(abs(q), 1e-6)


def test_zbase():
    assert zbase_ohm(60.0, 100.0) == pytest.approx(36.0)


def test_single_energized_island(two_feeder_net):
    islands = energized_islands(two_feeder_net)
    assert len(islands) == 1
    assert islands[0].energized
    assert islands[0].buses == frozenset(two_feeder_net.buses)


def test_island_partition_covers_every_bus_once(two_feeder_net):
    apply_switch_action(two_feeder_net, "B1", "open")
    islands = energized_islands(two_feeder_net)
    seen = [b for isl in islands for b in isl.buses]
    assert sorted(seen) == sorted(two_feeder_net.buses)
    assert len(seen) == len(set(seen))


def test_opening_feed_deenergizes_feeder(two_feeder_net):
    apply_switch_action(two_feeder_net, "B1", "open")
    apply_switch_action(two_feeder_net, "B2", "open")
    islands = energized_islands(two_feeder_net)
    by_bus = {b: isl for isl in islands for b in isl.buses}
    assert not by_bus["FLT"].energized
    assert not by_bus["F2M"].energized
    assert by_bus["M2"] is by_bus["F2M"]      # M2 hangs on feeder 2 through T2
    assert by_bus["M1"].energized
    assert by_bus["F1M"].energized


def test_close_tie_reenergizes(two_feeder_net):
    apply_switch_action(two_feeder_net, "B1", "open")
    apply_switch_action(two_feeder_net, "B2", "open")
    apply_switch_action(two_feeder_net, "B3", "closed")
    islands = energized_islands(two_feeder_net)
    by_bus = {b: isl for isl in islands for b in isl.buses}
    assert by_bus["F2M"].energized
    assert not by_bus["FLT"].energized


def test_switch_open_is_idempotent(two_feeder_net):
    apply_switch_action(two_feeder_net, "B1", "open")
    before = energized_islands(two_feeder_net)
    apply_switch_action(two_feeder_net, "B1", "open")
    after = energized_islands(two_feeder_net)
    assert [(i.buses, i.energized) for i in before] == [(i.buses, i.energized) for i in after]


def test_switch_round_trip_restores_partition(two_feeder_net):
    before = energized_islands(two_feeder_net)
    apply_switch_action(two_feeder_net, "B2", "open")
    apply_switch_action(two_feeder_net, "B2", "closed")
    after = energized_islands(two_feeder_net)
    assert [(i.buses, i.energized) for i in before] == [(i.buses, i.energized) for i in after]


def test_unknown_switch_id():
    net = parse_network(MINIMAL)
    with pytest.raises(ValidationError, match="B99"):
        apply_switch_action(net, "B99", "open")


def test_empty_network_has_no_islands():
    net = parse_network({"mva_base": 100.0})
    assert energized_islands(net) == []


def test_transformer_validation():
    bad = json.loads(json.dumps(MINIMAL))
    bad["transformers"] = [{"id": "TX", "from": "SRC", "to": "LOAD",
                            "connection": "delta/delta", "x": 0.1}]
    with pytest.raises(ValidationError, match="delta/delta"):
        parse_network(bad)
    bad["transformers"] = [{"id": "TX", "from": "SRC", "to": "LOAD",
                            "connection": "wye-g/wye-g", "x": 0.1, "tap": 1.5}]
    with pytest.raises(ValidationError, match="tap"):
        parse_network(bad)
