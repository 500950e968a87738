import os

import numpy as np
import pytest

import espnpt

DATA = os.environ.get("ESP_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def random_charges(n, L, seed):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, L, size=(n, 3))
    q = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return pos, q


def test_bandwidth_and_basis():
    c = espnpt.solve_bandwidth(1e-6)
    info = espnpt.pswf_info(c)
    assert info["psi0_at_one"] == pytest.approx(1e-6, rel=1e-6)
    v = espnpt.eval_psi0(c, [0.0, 0.5, 1.0])
    assert v[0] == pytest.approx(info["psi0_at_zero"])
    assert v[0] > v[1] > v[2] > 0


def test_compute_matches_direct_ksum_and_ewald():
    pos, q = random_charges(32, 6.0, 1)
    cfg = dict(delta_split=1e-6, r_c=2.4, oversampling=1.5, mode="ik")
    r = espnpt.compute(pos, q, (6.0, 6.0, 6.0), **cfg)
    assert r["forces"].shape == (32, 3)
    assert np.abs(r["forces"].sum(axis=0)).max() < 1e-8 * np.abs(r["forces"]).sum()

    d = espnpt.direct_ksum(pos, q, (6.0, 6.0, 6.0), **cfg)
    assert abs(r["U_far"] - d["energy"]) < 1e-5 * abs(r["energy"])
    assert np.linalg.norm(r["forces_far"] - d["forces"]) < 1e-5 * np.linalg.norm(r["forces"])

    e = espnpt.classical_ewald(pos, q, np.diag([6.0, 6.0, 6.0]))
    assert abs(r["energy"] - e["energy"]) < 1e-5 * abs(e["energy"])
    p = r["pressure"]["potential"]
    assert np.linalg.norm(p - e["pressure"]) < 1e-4 * np.linalg.norm(e["pressure"])


def test_local_pressure_sums_to_far_field():
    pos, q = random_charges(24, 5.0, 2)
    r = espnpt.compute(pos, q, (5.0, 5.0, 5.0), local_pressure=True, delta_split=1e-4, r_c=2.0)
    total = np.sum(r["local_pressure"], axis=0)
    assert np.allclose(total, r["pressure"]["far"], rtol=1e-10, atol=1e-14)


def test_parameter_errors_are_value_errors():
    pos, q = random_charges(8, 4.0, 3)
    with pytest.raises(ValueError):
        espnpt.compute(pos, q, (4.0, 4.0, 4.0), delta_split=1e-4)
    with pytest.raises(espnpt.ParameterError):
        espnpt.compute(pos, q, (4.0, 4.0, 4.0), r_c=1.0, no_such_key=1)
    with pytest.raises(espnpt.EspError):
        espnpt.compute(pos, q, (4.0, 4.0, 4.0), r_c=3.9)


def test_tune_and_fixture():
    t = espnpt.tune("diag-pressure", 1e-4)
    assert t["delta"] == 1e-3 and t["P"] == 4
    s = espnpt.read_particles(os.path.join(DATA, "fixtures", "fixture64.txt"))
    assert s["positions"].shape == (64, 3)
    assert abs(sum(s["charges"])) < 1e-12


def test_short_simulation_is_deterministic():
    s = espnpt.toy_system(32, 0.3, 5)
    L = s["cell"][0, 0]
    cfg = {"r_c": 0.5 * L - 0.35, "delta_split": 1e-4, "seed": 7, "npt": {"n_steps": 50, "record_every": 10}}
    a = espnpt.simulate(s["positions"], s["charges"], s["cell"], s["masses"], **cfg)
    b = espnpt.simulate(s["positions"], s["charges"], s["cell"], s["masses"], **cfg)
    assert len(a["volume"]) >= 5
    assert a["volume"] == b["volume"]
    assert np.all(np.isfinite(a["total_energy"]))
