import math

import numpy as np
import pytest

import plkcalib


def _scene():
    K = plkcalib.line_projection_matrix(plkcalib.CameraIntrinsics(500.0, 500.0, 320.0, 240.0))
    intr = plkcalib.CameraIntrinsics(500.0, 500.0, 320.0, 240.0)
    R = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])
    gt = plkcalib.ExtrinsicPose(R, np.array([0.05, -0.10, 0.08]))
    endpoints = [
        ([5.0, 1.0, -0.5], [6.0, -1.0, 0.5]),
        ([4.0, -1.0, -1.0], [4.5, 1.5, -0.2]),
        ([7.0, 0.5, 1.0], [6.0, -0.5, -1.5]),
        ([5.5, -1.5, 0.8], [5.0, 1.2, 1.1]),
    ]
    corrs = []
    for i, (p1, p2) in enumerate(endpoints):
        p1, p2 = np.array(p1), np.array(p2)
        s = intr.project_point(gt.transform_point(p1))
        e = intr.project_point(gt.transform_point(p2))
        corrs.append(
            plkcalib.Correspondence(
                plkcalib.PluckerLine.from_endpoints(p1, p2), plkcalib.LineSegment2D(s, e), f"line{i}"
            )
        )
    return K, gt, corrs


def test_plucker_orthogonality():
    line = plkcalib.PluckerLine.from_endpoints(np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.5, 2.0]))
    assert abs(float(np.dot(line.normal, line.direction))) < 1e-12


@pytest.mark.parametrize("solver", [plkcalib.solve_method1, plkcalib.solve_plk_calib])
def test_noiseless_recovery(solver):
    K, gt, corrs = _scene()
    init = plkcalib.pose_retract(gt, np.radians([5.0, 5.0, 5.0]), np.array([0.5, 0.5, 0.5]))
    res = solver(corrs, init, K)
    err = plkcalib.pose_error(res.pose, gt)
    assert res.converged
    assert not res.degeneracy.degenerate
    assert err.rot_err_deg < 1e-6
    assert err.trans_err_m < 1e-6


def test_too_few_lines_raises():
    K, gt, corrs = _scene()
    with pytest.raises(plkcalib.CalibError, match="at least 3 line pairs required"):
        plkcalib.solve_plk_calib(corrs[:2], gt, K)


def test_monte_carlo_deterministic():
    a = plkcalib.run_monte_carlo("a", "plk", trials=3, sigma=1.0, seed=7)
    b = plkcalib.run_monte_carlo("a", "plk", trials=3, sigma=1.0, seed=7)
    assert [t.trans_err_m for t in a.trials] == [t.trans_err_m for t in b.trials]
    assert a.completed == 3
    assert math.isfinite(a.translation.mean)


def test_merge_all_joins_fragments():
    segs = [
        plkcalib.LineSegment2D(np.array([0.0, 0.0]), np.array([30.0, 0.0])),
        plkcalib.LineSegment2D(np.array([33.0, 0.0]), np.array([60.0, 0.0])),
    ]
    out = plkcalib.merge_all(segs)
    assert len(out) == 1
    assert out[0].length() == pytest.approx(60.0)
