#!/usr/bin/env python3
"""Smoke test for the conformal_lab_py extension module.

Build the module first:

    cargo build -p conformal-lab-python --release

The script locates the produced cdylib under target/, links it into a
temporary directory under the importable name, and runs a few end-to-end
checks: exact jets, zoo curvatures, a predicted identity gap, a theorem
verdict, and a scenario run.
"""

import math
import os
import shutil
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_cdylib():
    candidates = [
        os.path.join(REPO, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libconformal_lab_py.so", "libconformal_lab_py.dylib", "conformal_lab_py.dll")
    ]
    for path in candidates:
        if os.path.exists(path):
            return path
    sys.exit(
        "conformal_lab_py cdylib not found; run "
        "`cargo build -p conformal-lab-python --release` first"
    )


def import_module():
    src = locate_cdylib()
    staging = tempfile.mkdtemp(prefix="conformal_lab_py_")
    suffix = ".pyd" if src.endswith(".dll") else ".so"
    shutil.copy2(src, os.path.join(staging, "conformal_lab_py" + suffix))
    sys.path.insert(0, staging)
    import conformal_lab_py

    return conformal_lab_py


def main():
    m = import_module()

    # exact 2-jet
    e = m.Expression("x1^2 + sin(x2)", 2)
    value, grad, hess = e.jet2([3.0, 0.0])
    assert value == 9.0, value
    assert grad == [6.0, 1.0], grad
    assert hess[0][0] == 2.0 and hess[1][1] == 0.0, hess

    # zoo curvatures
    ball = m.Manifold.zoo("hyperbolic_ball", 3)
    s = ball.scalar_curvature([0.2, 0.0, 0.1])
    assert abs(s + 6.0) < 1e-8, s
    sphere = m.Manifold.zoo("sphere_stereographic", 4, radius=1.0)
    assert abs(sphere.scalar_curvature([0.0, 0.0, 0.0, 0.0]) - 12.0) < 1e-8

    # transformation-law residual and a predicted gap
    flat = m.Manifold.zoo("euclidean", 3, half_width=0.5)
    d = m.Deformation.from_sigma(3, "log(2/(1 - (x1^2 + x2^2 + x3^2)))")
    report = m.identity_report("EQ_2_1", flat, d, points_per_axis=5)
    assert report["verdict"] == "holds", report
    assert report["max_abs_residual"] <= 1e-8, report

    flat2 = m.Manifold.zoo("euclidean", 3, half_width=2.0)
    quad = m.Deformation.from_lambda(3, "1 + x1^2")
    gap = m.identity_residual("LAP_SQUARE_PAPER", flat2, quad, [1.0, 0.0, 0.0])
    assert abs(gap - 4.0) < 1e-10, gap

    # theorem verdict
    verdict = m.check_theorem("T1", m.Manifold.zoo("euclidean", 3), m.Deformation.from_sigma(3, "0.7"))
    assert verdict["conclusion"] == "holds_on_grid", verdict

    # scenario end to end
    exit_code, csv = m.run_scenario(os.path.join(REPO, "scenarios", "conharmonic_family.toml"))
    assert exit_code == 0, csv
    assert "EQ_3_2_PAPER" in csv and "fails_as_predicted" in csv

    # catalogue
    assert "hyperbolic_ball" in m.zoo_list()

    # Laplacian sanity: lap |x|^2 = 2n in flat space
    rsq = m.Expression("x1^2 + x2^2 + x3^2", 3)
    lap = m.Manifold.zoo("euclidean", 3).laplace_beltrami(rsq, [0.1, 0.2, 0.3])
    assert math.isclose(lap, 6.0, rel_tol=1e-12), lap

    print("smoke test passed")


if __name__ == "__main__":
    main()
