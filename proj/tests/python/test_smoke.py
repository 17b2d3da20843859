import math

import numpy as np
import pytest

import saddlenet as sn


def test_projection():
    ball = sn.ConvexSet.ball(np.zeros(2), 1.0)
    np.testing.assert_allclose(ball.project(np.array([3.0, 4.0])), [0.6, 0.8], rtol=0, atol=1e-15)
    box = sn.ConvexSet.uniform_box(1, -5, 5)
    assert box.project(np.array([7.0]))[0] == 5.0
    with pytest.raises(sn.ValidationError):
        sn.ConvexSet.box(np.array([1.0]), np.array([0.0]))


def test_steps_on_xy():
    inst = sn.scalar_bilinear()
    z = np.array([1.0, 1.0])
    np.testing.assert_allclose(inst.step("GDA", z, 0.1), [0.9, 1.1], atol=1e-15)
    z1 = inst.step("OGDA", z, 0.1)
    np.testing.assert_allclose(inst.step("OGDA", z1, 0.1, z_prev=z), [0.78, 1.18], atol=1e-15)
    np.testing.assert_allclose(inst.step("EG", z, 0.1), [0.89, 1.09], atol=1e-15)


def test_bilinear_box_instance():
    inst = sn.example1(1)
    assert inst.kind == "saddle"
    B = np.array(inst.parameters["B"])
    assert inst.kappa == pytest.approx(2 * np.linalg.norm(B.reshape(10, 10), 2), rel=1e-9)
    assert inst.vi_residual(np.zeros(20)) == 0.0
    tr = inst.run("EG", alpha=inst.alpha, iters=200, stop_tol=0.0)
    assert tr["grad_calls"] == 400
    assert len(tr["f_value"]) == 201
    assert all(g <= b + 1e-10 for g, b in zip(tr["ergodic_gap"][1:], tr["rate_bound"][1:]))


def test_spectral_helpers():
    assert sn.spectral_norm(np.full((10, 10), 2.5)) == pytest.approx(25.0)
    ring20 = [(i, (i + 1) % 20) for i in range(20)]
    assert sn.lambda_max(20, ring20) == pytest.approx(4.0, rel=1e-9)
    assert sn.step_bound("EG", 10.0) == 0.1


def test_network_runs():
    cons = sn.consensus_quadratics()
    r = cons.run_network("OGDA", iters=100000)
    assert r["primal_error"] <= 1e-4
    alloc = sn.allocation_quadratics()
    np.testing.assert_allclose(alloc.kkt()["y_star"], [-1.0, 0.0, 1.0], atol=1e-9)
    r = alloc.run_network("EG", iters=20000)
    assert r["constraint_residual"] <= 1e-8


def test_presets_and_commands(tmp_path):
    names = [n for n, _ in sn.list_presets()]
    assert names[:2] == ["example1", "example2"]
    res = sn.solve(preset="quadratic", iters=100, out=str(tmp_path / "q"))
    assert res["exit_code"] == 0
    assert {r["method"] for r in res["runs"]} == {"GDA", "OGDA", "EG"}
    assert (tmp_path / "q" / "ogda.csv").exists()
    rep = sn.verify(preset="corrupted", out=str(tmp_path / "c"))
    assert not rep["passed"]
    assert any(c["name"] == "gradient_fd" and not c["passed"] for c in rep["checks"])
    with pytest.raises(sn.ValidationError):
        sn.solve(preset="example1", methods=[], out=str(tmp_path / "e"))
    with pytest.raises(sn.ValidationError):
        sn.build(config="instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\nmethods: []\n")


def test_kkt_example2():
    inst = sn.example2(1)
    k = inst.kkt()
    assert k["feasibility"] <= 1e-8
    assert math.isfinite(k["objective"])
    assert inst.vi_residual(inst.z_star) <= 1e-8
