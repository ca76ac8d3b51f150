"""Circuit-matrix assembly checks against hand-computed structure."""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spec
from uscsim.circuit import CircuitSpec, build_matrices, validate_spec
from uscsim.constants import FF, NH


def test_reference_corner_entry(default_spec):
    # node-0 capacitance: input + coupler + junction + island = 141.1 fF
    mats = build_matrices(default_spec, include_input_cap=True)
    assert mats.cap[0, 0] == pytest.approx(141.1 * FF, rel=1e-12)


def test_matrix_structure(default_spec):
    mats = build_matrices(default_spec)
    n = default_spec.n_junctions
    assert mats.cap.shape == (n + 2, n + 2)
    assert np.allclose(mats.cap, mats.cap.T)
    assert np.allclose(mats.ind_inv, mats.ind_inv.T)
    # the inductive network is a pure chain: each row sums to zero and the
    # qubit node carries no linear inductance
    assert np.allclose(mats.ind_inv.sum(axis=1), 0.0)
    assert np.all(mats.ind_inv[-1] == 0.0)
    # nearest-neighbour couplings only
    off = np.triu(np.abs(mats.ind_inv), k=2)
    assert np.all(off == 0.0)
    assert mats.is_positive_definite()


def test_junction_inductance_value(default_spec):
    mats = build_matrices(default_spec)
    assert mats.ind_inv[0, 1] == pytest.approx(-1.0 / (1.5 * NH), rel=1e-12)


def test_input_cap_toggle(default_spec):
    with_ci = build_matrices(default_spec, include_input_cap=True)
    without = build_matrices(default_spec, include_input_cap=False)
    diff = with_ci.cap - without.cap
    expected = np.zeros_like(diff)
    expected[0, 0] = default_spec.c_i * FF
    assert np.allclose(diff, expected)


def test_validate_reference_is_clean(default_spec):
    assert validate_spec(default_spec) == []


def test_validate_flags_degenerate_cases(default_spec):
    from dataclasses import replace
    assert any("decouples" in msg
               for msg in validate_spec(replace(default_spec, c_q=0.0)))
    assert any("Josephson" in msg
               for msg in validate_spec(
                   replace(default_spec, e_j_transmon=0.0)))


@pytest.mark.parametrize("field,value", [
    ("n_junctions", 0), ("l_j", 0.0), ("l_j", -1.0), ("c_j", -1.0),
    ("c_q", -0.1), ("e_j_transmon", -1.0),
])
def test_spec_rejects_invalid(field, value):
    kwargs = dict(n_junctions=3, l_j=1.0, c_j=10.0, c_0=0.1, c_q=50.0,
                  c_s=60.0, c_i=10.0, c_e=10.0, e_j_transmon=10.0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        CircuitSpec(**kwargs)


def test_flux_bias_wrapping():
    spec = CircuitSpec(n_junctions=2, l_j=1.0, c_j=10.0, c_0=0.1, c_q=50.0,
                       c_s=60.0, c_i=10.0, c_e=10.0, e_j_transmon=10.0,
                       flux_bias=2.3)
    assert spec.flux_bias == pytest.approx(0.3)


def test_csv_export_round_trip(tmp_path, default_spec):
    mats = build_matrices(default_spec)
    path = tmp_path / "mats.csv"
    mats.to_csv(str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    n = mats.n_nodes
    assert rows[0][:2] == ["matrix", "node"]
    assert len(rows) == 1 + 2 * n
    cap_back = np.array([[float(x) for x in row[2:]]
                         for row in rows[1:1 + n]])
    assert np.allclose(cap_back, mats.cap, rtol=1e-10, atol=1e-25)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_random_specs_are_well_posed(seed):
    spec = random_spec(np.random.default_rng(seed), n_max=15)
    mats = build_matrices(spec)
    assert np.allclose(mats.cap, mats.cap.T)
    assert mats.is_positive_definite()
    assert validate_spec(spec, mats) == []
