import math
import pathlib

import numpy as np
import pytest

import stbound

ROOT2 = math.sqrt(2.0)


def test_references():
    sigma = stbound.reference_bb84()
    assert len(sigma) == 4
    assert sum(np.trace(s).real for s in sigma) == pytest.approx(2.0)
    assert len(stbound.reference_rac2()) == 4
    assert stbound.reference_phi_plus().shape == (4, 4)


def test_chsh_endpoints():
    low = stbound.assemblage_bound(2.0, level=3)
    assert low.converged
    assert low.objective == pytest.approx(0.75, abs=2e-3)
    top = stbound.assemblage_bound(2 * ROOT2, level=3)
    assert top.objective >= 0.999


def test_chsh_above_quantum_maximum_is_infeasible():
    assert stbound.assemblage_bound(3.0, level=2).status == "infeasible"


def test_rac_maximum():
    r = stbound.pm_bound((2 + ROOT2) / 4, level=2)
    assert r.converged
    assert r.objective >= 0.999


def test_steering_bound():
    assert stbound.steering_bound(2.0, level=2).objective >= 0.99


def test_table_matches_its_oracle():
    # Perfect BB84 correlations with Bob measuring in the matching basis.
    p = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    p[x, y, a, b] = 0.25 if x != y else 0.5 * (a == b)
    r = stbound.assemblage_bound_table(p.tolist(), level=2)
    assert r.converged
    assert r.objective <= stbound.assemblage_fidelity(stbound.reference_bb84()) + 1e-6


def test_oracles():
    ref = stbound.reference_bb84()
    assert stbound.assemblage_fidelity(ref) == pytest.approx(1.0, abs=1e-6)
    assert stbound.ensemble_fidelity(stbound.reference_rac2()) == pytest.approx(1.0, abs=1e-6)
    product = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])).astype(complex)
    assert stbound.steering_fidelity(product) == pytest.approx(0.5, abs=1e-6)


def test_non_hermitian_input_is_rejected():
    bad = [np.array([[1, 1], [0, 0]], dtype=complex)] * 4
    with pytest.raises(ValueError):
        stbound.assemblage_fidelity(bad)


def test_run_and_compare(tmp_path: pathlib.Path):
    cfg = tmp_path / "chsh.ini"
    cfg.write_text(
        "schema = 1\n"
        "scenario = bell-assemblage\n"
        "reference = bb84\n"
        "level = 2\n"
        "[data]\n"
        "functional = chsh\n"
        "from = 2.0\n"
        "to = 2.5\n"
        "steps = 2\n"
        "[output]\n"
        "csv = out.csv\n"
    )
    assert stbound.run_config(str(cfg)) == 0
    out = tmp_path / "out.csv"
    assert out.exists()
    assert stbound.compare(str(out), str(out), 1e-9) == 0
