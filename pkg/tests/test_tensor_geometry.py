"""Principal-axis decomposition and uncertainty propagation."""

import numpy as np
import pytest

from nvbeat.spin_core import HyperfineTensor
from nvbeat.tensor_geometry import magnitude_sorted, principal_axes, principal_sigmas

REF = HyperfineTensor(166.9, 122.9, 90.0, -90.3)


def tensor_matrix(t):
    return np.array([[t.a_xx, 0.0, t.a], [0.0, t.a_yy, 0.0], [t.a, 0.0, t.a_zz]])


def test_reference_values():
    ax = principal_axes(REF)
    assert abs(ax.values[0] - 30.30473776) < 1e-6
    assert ax.values[1] == 122.9
    assert abs(ax.values[2] - 226.5952622) < 1e-6
    assert abs(ax.theta_p - 56.53222225) < 1e-6
    assert abs(ax.theta_p_alt - 123.4677777) < 1e-6


def test_invariants_random():
    rng = np.random.default_rng(6)
    for _ in range(200):
        t = HyperfineTensor(*(float(x) for x in rng.uniform(-200, 200, size=4)))
        ax = principal_axes(t)
        small, y, big = ax.values
        assert small <= big
        assert y == t.a_yy
        assert abs((small + big) - (t.a_xx + t.a_zz)) < 1e-9 * max(1, abs(small + big))
        assert abs(small * big - (t.a_xx * t.a_zz - t.a**2)) < 1e-6
        assert abs(ax.theta_p + ax.theta_p_alt - 180.0) < 1e-12
        r = ax.rotation
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) > 0
        rebuilt = r @ np.diag(ax.values) @ r.T
        assert np.max(np.abs(rebuilt - tensor_matrix(t))) < 1e-9


def test_diagonal_tensor_cases():
    # no off-diagonal coupling: the big in-plane axis is x or z outright
    assert principal_axes(HyperfineTensor(150.0, 100.0, 90.0, 0.0)).theta_p == 90.0
    assert principal_axes(HyperfineTensor(90.0, 100.0, 150.0, 0.0)).theta_p == 0.0
    # isotropic in-plane block: angle pinned to the z axis by convention
    iso = principal_axes(HyperfineTensor(50.0, 70.0, 50.0, 0.0))
    assert iso.theta_p == 0.0
    assert iso.values[0] == iso.values[2] == 50.0


def test_pure_off_diagonal():
    ax = principal_axes(HyperfineTensor(0.0, 10.0, 0.0, 5.0))
    assert abs(ax.theta_p - 45.0) < 1e-12
    assert abs(ax.values[0] + 5.0) < 1e-12
    assert abs(ax.values[2] - 5.0) < 1e-12


def test_magnitude_sorted():
    ax = principal_axes(HyperfineTensor(10.0, 122.9, -200.0, 3.0))
    m = magnitude_sorted(ax)
    assert list(np.abs(m)) == sorted(np.abs(m), reverse=True)
    assert set(m) == set(ax.values)


def test_principal_sigmas_monte_carlo():
    sig = {"a_xx": 0.02, "a_yy": 0.05, "a_zz": 0.03, "a": 0.04}
    prop = principal_sigmas(REF, sig)
    rng = np.random.default_rng(8)
    draws = {"small": [], "y": [], "big": [], "tp": []}
    for _ in range(4000):
        t = HyperfineTensor(
            REF.a_xx + rng.normal(0, sig["a_xx"]),
            REF.a_yy + rng.normal(0, sig["a_yy"]),
            REF.a_zz + rng.normal(0, sig["a_zz"]),
            REF.a + rng.normal(0, sig["a"]),
        )
        ax = principal_axes(t)
        draws["small"].append(ax.values[0])
        draws["y"].append(ax.values[1])
        draws["big"].append(ax.values[2])
        draws["tp"].append(ax.theta_p)
    pairs = (
        (prop["value_small"], np.std(draws["small"])),
        (prop["value_y"], np.std(draws["y"])),
        (prop["value_big"], np.std(draws["big"])),
        (prop["theta_p"], np.std(draws["tp"])),
    )
    for propagated, empirical in pairs:
        assert abs(propagated - empirical) < 0.08 * empirical


def test_principal_sigmas_covariance_path():
    sig = {"a_xx": 0.02, "a_yy": 0.05, "a_zz": 0.03, "a": 0.04}
    cov = np.diag([sig[k] ** 2 for k in ("a_xx", "a_yy", "a_zz", "a")])
    d1 = principal_sigmas(REF, sig)
    d2 = principal_sigmas(REF, {}, covariance=cov)
    for key in ("value_small", "value_y", "value_big", "theta_p"):
        assert abs(d1[key] - d2[key]) < 1e-12
    with pytest.raises(ValueError, match="4x4"):
        principal_sigmas(REF, {}, covariance=np.eye(3))


def test_y_sigma_passthrough():
    out = principal_sigmas(REF, {"a_yy": 0.7})
    assert abs(out["value_y"] - 0.7) < 1e-6
    assert out["value_small"] < 1e-9
