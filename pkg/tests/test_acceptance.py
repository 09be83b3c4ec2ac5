"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Criteria (6) and (7)
dominate the runtime (a few minutes: 40 constrained minimizations with
mandatory 2x refinement, and three frame realizations).
"""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_admissible_pair, random_rational
from hcmu_lab import cli
from hcmu_lab.algebra import (
    CubicData,
    MuElement,
    certify_nonvanishing,
    derive,
    obstruction_poly,
)
from hcmu_lab.fields import GridDomain, TraceConstraint, holonomy_defect
from hcmu_lab.optimize import optimize_shape_field
from hcmu_lab.profile import (
    closed_form_agreement,
    curvature_at,
    curvature_residual,
    read_profile_csv,
    solve_curvature_ode,
    validate_params,
    write_profile_csv,
)
from hcmu_lab.ratpoly import RationalPoly
from hcmu_lab.realize import (
    export_mesh,
    family_shape_field,
    integrate_frame,
    parse_mesh,
    solve_codazzi_family,
    transport_frame,
    verify_immersion,
)

F = Fraction


def verdict(num: int, ok: bool, detail: str):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    assert ok, line


# -- 1: exact identity suite ------------------------------------------------------


def test_criterion_1_exact_identity_suite():
    rng = random.Random(1001)
    target = RationalPoly((0, -4))
    failures = 0
    for _ in range(100):
        k1, k2 = random_admissible_pair(rng)
        P = CubicData.from_extremes(k1, k2).poly()
        mu = MuElement.mu(P)
        mu1 = derive(mu, P)
        expr = mu * derive(mu1, P) + mu1 * mu1
        if not (expr.is_pure() and expr.as_polynomial() == target):
            failures += 1
    verdict(1, failures == 0,
            f"mu mu'' + (mu')^2 == -4K exactly for 100/100 random pairs "
            f"({failures} failures)")


# -- 2: obstruction certification -------------------------------------------------


def test_criterion_2_obstruction_certification():
    rng = random.Random(2002)
    ok = True
    for _ in range(100):
        k1, k2 = random_admissible_pair(rng)
        c = random_rational(rng)
        phi = obstruction_poly(CubicData.from_extremes(k1, k2), c)
        if phi.degree != 3 or phi.leading != F(-56, 3):
            ok = False
            break
    cert = certify_nonvanishing(obstruction_poly(CubicData.from_extremes(2, 1), 0),
                                (1, 2))
    ok = ok and cert.root_free
    verdict(2, ok,
            "degree 3, leading coefficient -56/3 for 100/100 random "
            "(K1, K2, c); (2, 1, 0) certified root-free on (1, 2)")


# -- 3: ODE / closed-form agreement ------------------------------------------------


def test_criterion_3_ode_vs_closed_form():
    params = validate_params(2, 1)
    prof = solve_curvature_ode(params, 1.5, (-10.0, 10.0), 1e-3)
    rep = closed_form_agreement(prof, tol=1e-8, safety=32.0)
    ok_dev = rep.max_dev_masked < 1e-8

    # Richardson order under step halving, measured where RK4 truncation
    # still dominates double-precision noise (at 1e-3 the propagated error
    # is already at the rounding floor).
    x_star = 3.0
    k_exact = curvature_at(params, 1.5, x_star)
    errs = []
    for h in (8e-3, 4e-3):
        p = solve_curvature_ode(params, 1.5, (0.0, 4.0), h)
        errs.append(abs(p.Ks[int(round(x_star / h))] - k_exact))
    order = math.log2(errs[0] / errs[1])
    ok_order = 3.5 <= order <= 4.5
    verdict(3, ok_dev and ok_order,
            f"max |x_impl(K(x)) - x| = {rep.max_dev_masked:.3e} < 1e-8 on the "
            f"{rep.masked_nodes}/{rep.total_nodes} nodes where the inverse is "
            f"conditioned at 1e-8 (unmasked sup {rep.max_dev_all:.2e} is pure "
            f"float conditioning); Richardson order {order:.2f} in [3.5, 4.5]")


# -- 4: curvature self-consistency -------------------------------------------------


def test_criterion_4_conformal_curvature():
    params = validate_params(2, 1)
    prof = solve_curvature_ode(params, 1.5, (-2, 2), 1e-3)
    r1 = curvature_residual(prof, 1e-2)
    r2 = curvature_residual(prof, 5e-3)
    ratio = r1.max_residual / r2.max_residual
    ok = r1.max_residual < 1e-3 and 3.5 <= ratio <= 4.5
    verdict(4, ok,
            f"residual {r1.max_residual:.3e} < 1e-3 at h = 1e-2; halving "
            f"ratio {ratio:.2f} in [3.5, 4.5]")


# -- 5: holonomy defect vs exact prediction -----------------------------------------


def test_criterion_5_holonomy_defect():
    params = validate_params(2, 1, c=3.0)
    n, h = 41, 1e-3
    grid = GridDomain.create(params, 1.5, n, n, h, h,
                             origin=(-0.5 * (n - 1) * h, 0.0))
    K0 = grid.K[0]
    h0 = math.sqrt(params.mu_sq(K0) * (3.0 - K0) / 4.0) * np.exp(0.3j)
    hd = holonomy_defect(grid, 3.0, h0, (4, 4, 36, 36))
    gap = abs(hd.measured / hd.predicted - 1.0)
    verdict(5, gap <= 0.05,
            f"measured/predicted holonomy ratio off by {gap:.4f} <= 0.05 "
            f"(params (2,1), c = 3, grid step 1e-3)")


# -- 6: existence / non-existence contrast ------------------------------------------


@pytest.fixture(scope="module")
def contrast_grid():
    params = validate_params(2, 1)
    return GridDomain.create(params, 1.5, 32, 32, 0.01, 0.01,
                             origin=(-0.16, 0.0))


def test_criterion_6a_unconstrained_existence(contrast_grid):
    params = contrast_grid.params
    prof = solve_curvature_ode(params, 1.5, (-1, 1), 1e-3)
    fam = solve_codazzi_family(prof, 0.0, 1.0)
    seed_field = family_shape_field(fam, contrast_grid)
    _, rep = optimize_shape_field(contrast_grid, 0.0, TraceConstraint("none"),
                                  init_field=seed_field, tol=1e-10,
                                  max_iter=40)
    ok = rep.total_l2 < 1e-8
    verdict(6, ok,
            f"constraint none seeded at the diagonal family: l2 = "
            f"{rep.total_l2:.3e} < 1e-8 on 32x32 (existence side)")


def test_criterion_6b_constrained_floors(contrast_grid):
    seeds = range(10)
    all_ok = True
    details = []
    for label, constraint in [
        ("minimal", TraceConstraint("minimal")),
        ("cmc:0", TraceConstraint("cmc", 0.0)),
        ("cmc:0.5", TraceConstraint("cmc", 0.5)),
        ("cmc:1", TraceConstraint("cmc", 1.0)),
    ]:
        floors32, floors64 = [], []
        for seed in seeds:
            _, rep = optimize_shape_field(contrast_grid, 0.0, constraint,
                                          seed=seed, max_iter=25)
            (_, _, f32), (_, _, f64) = rep.refinement_history
            floors32.append(f32)
            floors64.append(f64)
        floor32 = min(floors32)
        floor64 = min(floors64)
        ratio = floor64 / floor32
        ok = floor32 > 1e-4 and ratio >= 0.9
        all_ok = all_ok and ok
        details.append(f"{label}: floor32 {floor32:.3e}, ratio {ratio:.3f}")
    verdict(6, all_ok,
            "residual floors over 10 seeds exceed 1e-4 and persist under "
            "2x refinement (" + "; ".join(details) + ")")


# -- 7: realization fidelity ---------------------------------------------------------


def test_criterion_7_realization_fidelity():
    all_ok = True
    details = []
    for c in (0.0, 1.0, -1.0):
        params = validate_params(2, 1, c=c)
        prof = solve_curvature_ode(params, 1.5, (-1, 1), 1e-3)
        fam = solve_codazzi_family(prof, c, 1.0)
        grid = GridDomain.create(params, 1.5, 101, 41, 1e-3, 1e-3,
                                 origin=(-0.05, 0.0))
        mesh = integrate_frame(fam, grid)
        rep = verify_immersion(mesh, fam)
        f1 = transport_frame(fam, grid, [(0, 0), (100, 0), (100, 40)])
        f2 = transport_frame(fam, grid, [(0, 0), (0, 40), (100, 40)])
        path_gap = float(np.linalg.norm(f1.X - f2.X))
        ok = (rep.metric_rel_err < 1e-6 and path_gap < 1e-6
              and rep.weingarten_spread < 1e-6 and not rep.cmc_flag
              and rep.mean_curv_range > 1e-3)
        if c != 0:
            ok = ok and rep.quadric_drift < 1e-7
        all_ok = all_ok and ok
        details.append(
            f"c={c:g}: metric {rep.metric_rel_err:.1e}, path {path_gap:.1e}, "
            f"drift {rep.quadric_drift:.1e}, spread {rep.weingarten_spread:.1e}"
        )
    verdict(7, all_ok, "; ".join(details))


# -- 8: roundtrips -------------------------------------------------------------------


def test_criterion_8_roundtrips(tmp_path):
    params = validate_params(2, 1, c=1.0)
    prof = solve_curvature_ode(params, 1.5, (-0.5, 0.5), 1e-3)
    fam = solve_codazzi_family(prof, 1.0, 1.0)
    grid = GridDomain.create(params, 1.5, 9, 9, 1e-3, 1e-3,
                             origin=(-0.004, 0.0))
    mesh = integrate_frame(fam, grid)
    mesh_path = tmp_path / "mesh.txt"
    export_mesh(mesh, mesh_path)
    back = parse_mesh(mesh_path)
    mesh_ok = (np.array_equal(mesh.vertices, back.vertices)
               and np.array_equal(mesh.normals, back.normals)
               and np.array_equal(mesh.faces, back.faces))

    csv_path = tmp_path / "profile.csv"
    write_profile_csv(prof, csv_path)
    table = read_profile_csv(csv_path)
    csv_ok = all(
        np.array_equal(a, b)
        for a, b in zip((prof.xs, prof.Ks, prof.mus, prof.phis), table)
    )

    blobs = []
    for tag in ("a", "b"):
        obs = tmp_path / f"obs_{tag}.txt"
        opt = tmp_path / f"opt_{tag}.txt"
        assert cli.main(["obstruction", "--k1", "2", "--k2", "1",
                         "--out", str(obs)]) == 0
        assert cli.main(["optimize", "--k1", "2", "--k2", "1", "--k0", "1.5",
                         "--grid", "10,10,0.01,0.01", "--seed", "3",
                         "--constraint", "minimal", "--max-iter", "8",
                         "--out", str(opt)]) == 0
        blobs.append(obs.read_bytes() + opt.read_bytes())
    cli_ok = blobs[0] == blobs[1]

    verdict(8, mesh_ok and csv_ok and cli_ok,
            f"mesh roundtrip bit-identical: {mesh_ok}; profile CSV "
            f"bit-identical: {csv_ok}; CLI byte-reproducible: {cli_ok}")
