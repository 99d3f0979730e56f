import json

import numpy as np
import pytest

import probfem


def test_closed_form():
    assert probfem.pullout_exact_solution(0.8, 70.0, 10.0, 1.0) == pytest.approx(1.336306, rel=1e-6)


def test_single_element_bar():
    sol = probfem.fem_pullout(0.8, 70.0, 10.0, 1)
    K = np.array([[0.8 + 70 / 3, -0.8 + 70 / 6], [-0.8 + 70 / 6, 0.8 + 70 / 3]])
    np.testing.assert_allclose(sol["u"], np.linalg.solve(K, [0.0, 10.0]), rtol=1e-12)


def test_bfem_mean_is_fem():
    like = probfem.bfem_pullout(0.8, 70.0, n_elements=4)
    assert like["mean"][0] == pytest.approx(probfem.fem_pullout(0.8, 70.0, 10.0, 4)["u"][-1], rel=1e-12)
    assert like["cov"][0, 0] > 0


def test_beam_mesh():
    mesh = probfem.triangulate_beam([1.0, 0.4, 0.4, np.pi / 6, 0.25], 0.2)
    assert mesh["nodes"].shape[1] == 2
    assert abs(len(mesh["elements"]) - 332) <= 0.3 * 332


def test_short_chain():
    out = probfem.run({"problem": "pullout", "chain": {"n_burn": 200, "n": 300, "seed": 4}})
    assert out["samples"].shape == (300, 2)
    assert out["names"] == ["EA", "k"]
    again = probfem.run({"problem": "pullout", "chain": {"n_burn": 200, "n": 300, "seed": 4}})
    np.testing.assert_array_equal(out["samples"], again["samples"])


def test_config_errors():
    with pytest.raises(probfem.ConfigError):
        probfem.parse_config(json.dumps({"problem": "pullout", "h": 0.3}))
    assert json.loads(probfem.parse_config('{"problem": "three_point"}'))["h"] == 0.2
