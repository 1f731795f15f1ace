import json
import shutil

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfwb.data import DataError, data_dir
from pfwb.invariants import (bps_checks, bps_contribution, consistency_warnings, euler_from_hodge, load_bps,
                             load_invariants)


@pytest.mark.parametrize("h11, h21, e", [(1, 50, -98), (2, 52, -100), (7, 7, 0)])
def test_euler_from_hodge(h11, h21, e):
    assert euler_from_hodge(h11, h21) == e


@given(st.integers(0, 500), st.integers(0, 500))
def test_euler_mirror_antisymmetry(a, b):
    assert euler_from_hodge(a, b) == -euler_from_hodge(b, a)


@pytest.mark.parametrize("args, value", [((6, 7, 1), 7), ((3, -50, 2), 100), ((0, 1, 1), 1)])
def test_bps_contribution(args, value):
    assert bps_contribution(*args) == value


def test_rodland_pair_euler_numbers():
    inv = load_invariants()
    for name in ("rodland_X", "rodland_Y"):
        rec = inv[name]
        assert rec.euler == euler_from_hodge(rec.h11, rec.h21) == -98
        assert rec.warnings == []
    assert (inv["rodland_X"].H3, inv["rodland_X"].c2H) == (42, 84)
    assert (inv["rodland_Y"].H3, inv["rodland_Y"].c2H) == (14, 56)


def test_reye_conflict_is_flagged_not_fixed():
    rec = load_invariants()["reye_X"]
    assert rec.h21 == 51 and rec.euler == -50
    assert not rec.hodge_trusted
    warnings = consistency_warnings()
    assert any("reye_X" in w and "-100" in w for w in warnings)
    assert any("mirror h21 = 26" in w for w in warnings)


def test_quotient_euler_number():
    inv = load_invariants()
    assert inv["reye_Xtilde"].euler // 2 == inv["reye_X"].euler


def test_bps_tables():
    grpf, reye = load_bps("grpf"), load_bps("reye")
    assert grpf.n(8, 14) == 7 and grpf.n(6, 14) == 123676 and grpf.n(10, 14) == 0
    assert reye.n(0, 5) == 12279982850 and reye.n(3, 5) == 100
    with pytest.raises(KeyError):
        grpf.n(0, 14)
    with pytest.raises(TypeError):
        grpf.entries[(8, 14)] = 8
    with pytest.raises(KeyError):
        load_bps("nope")


def test_identities_against_tables():
    assert all(c["pass"] for c in bps_checks())


def test_tampered_table_rejected(tmp_path, monkeypatch):
    shutil.copytree(data_dir(), tmp_path / "data")
    path = tmp_path / "data" / "bps_reye.json"
    doc = json.loads(path.read_text())
    doc["entries"][3]["n"] = 101
    path.write_text(json.dumps(doc))
    monkeypatch.setenv("PFWB_DATA_DIR", str(tmp_path / "data"))
    with pytest.raises(DataError):
        load_bps("reye")
