"""Acceptance criteria, one test each, every test printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
Thresholds are fixed here; a failing line is a finding, not a flaky test.
"""

from __future__ import annotations

import functools
import sys

import numpy as np
import pytest

from mrlbm import preset, run
from mrlbm.adaptive_solver import (
    adaptive_step,
    collide_leaves,
    collide_reconstructed,
    initial_state,
    make_policy,
    reference_trajectory,
)
from mrlbm.diagnostics import accumulation_study, detail_decay_study, epsilon_sweep
from mrlbm.dyadic_mesh import MeshGeometry, MeshTree, grade
from mrlbm.lbm_core import step_uniform
from mrlbm.metrics import loglog_fit
from mrlbm.models import ScalarFlux, build_d1q2
from mrlbm.multiresolution import (
    LeafField,
    complete_levels,
    decode,
    encode,
    predict,
    predict_level,
)

SWEEP_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5)
TEST_V_EPSILONS = (1e-5, 1e-6, 1e-7)
S_VALUES = (0.75, 1.0, 1.25, 1.5, 1.75)
# printed E/e ratios at eps = 1e-4, indexed by (test, s)
TABLE_RATIOS = {
    "I": (9.97e1, 5.94e1, 3.52e1, 1.94e1, 8.34e0),
    "II": (1.86e3, 2.31e3, 2.62e3, 2.44e3, 1.21e3),
    "III": (5.93e1, 3.71e1, 2.29e1, 1.31e1, 5.71e0),
    "IV": (3.50e2, 3.41e2, 3.93e2, 9.72e1, 2.90e2),
}
SMOOTH, SHOCKED = ("I", "III"), ("II", "IV")


def emit(number: int, ok: bool, detail: str, capsys=None) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


@functools.lru_cache(maxsize=None)
def _reference(name: str, items: tuple):
    return reference_trajectory(preset(name, **dict(items)).validate())


def reference_for(name: str, **overrides):
    """Validated config and its uniform trajectory, shared by every threshold."""
    cfg = preset(name, **overrides).validate()
    return cfg, _reference(name, tuple(sorted(overrides.items())))


@functools.lru_cache(maxsize=None)
def sweep(name: str, epsilons=SWEEP_EPSILONS, **overrides):
    cfg, ref = reference_for(name, **overrides)
    return epsilon_sweep(cfg, epsilons, reference=ref)


def sweep_kw(name, epsilons=SWEEP_EPSILONS, **overrides):
    return sweep(name, tuple(epsilons), **overrides)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1():
    targets = {0: 8.00, 1: 2.00, 2: 1.41, 3: 1.00}
    at10, ok = {}, True
    coarse = {}
    for field, target in targets.items():
        rows = {r.level: r.ratio for r in detail_decay_study(field, gamma=1, min_level=2, max_level=17)}
        at10[field] = rows[10]
        ok &= abs(rows[10] - target) <= 0.02
        if field == 0:
            coarse = {5: rows[5], 4: rows[4]}
    ok &= abs(coarse[5] - 7.35) <= 0.3 and abs(coarse[4] - 5.43) <= 0.3
    detail = ("ratios at j=10 " + ", ".join(f"{at10[f]:.2f}" for f in range(4))
              + f"; field 0 at j=5 {coarse[5]:.2f}, j=4 {coarse[4]:.2f}")
    return ok, detail


def _degeneracy_deviation(name: str, **overrides) -> float:
    cfg = preset(name, epsilon=0.0, **overrides).validate()
    spec = cfg.build_scheme()
    g = cfg.geometry
    T = 200 * g.dx / spec.lam
    state = initial_state(g, spec, cfg.initial_datum().on_geometry(g), make_policy(cfg, spec), cfg.collision,
                          cfg.boundary)
    F = state.field.values.copy()
    worst = 0.0
    for _ in range(int(round(T * spec.lam / g.dx))):
        state = adaptive_step(state)
        F = step_uniform(F, spec, cfg.boundary)
        worst = max(worst, float(np.abs(state.reconstruct() - F).max() / np.abs(F).max()))
    return worst


def criterion_2():
    cases = {"d1q2-advection": ("I", {}), "d1q2-burgers": ("IV", {}), "d1q3": ("sw-d1q3", {}),
             "d1q5": ("sw-d1q5", {"s": 1.6}), "euler": ("sod", {})}
    devs = {k: _degeneracy_deviation(name, **kw) for k, (name, kw) in cases.items()}
    ok = all(d <= 1e-12 for d in devs.values())
    return ok, "max relative deviation over 200 steps " + ", ".join(f"{k} {v:.1e}" for k, v in devs.items())


def criterion_3():
    ok, parts = True, []
    for test in ("I", "II", "III", "IV"):
        res = sweep_kw(test, s=1.0)
        slope = res.slopes[0]
        worst = float((res.e_final[:, 0] / res.epsilons).max())
        ok &= 0.7 <= slope <= 1.3 and worst <= 10.0
        parts.append(f"{test} slope {slope:.3f} max e/eps {worst:.2f}")
    return ok, "; ".join(parts)


def criterion_4():
    ours = {}
    ok_factor = True
    worst = (1.0, None)
    for test, printed in TABLE_RATIOS.items():
        for s, value in zip(S_VALUES, printed):
            cfg, ref = reference_for(test, s=s)
            ratio = float(run(cfg, reference=ref).ratio_final[0])
            ours[(test, s)] = ratio
            factor = max(ratio / value, value / ratio)
            ok_factor &= factor <= 3.0
            if factor > worst[0]:
                worst = (factor, (test, s))
    ok_sep = all(ours[("II", s)] >= 1e3 and ours[("IV", s)] >= 1e2 for s in S_VALUES)
    ok_sep &= all(min(ours[(t, s)] for t in SHOCKED) > max(ours[(t, s)] for t in SMOOTH) for s in S_VALUES)
    detail = (f"largest factor to printed value {worst[0]:.2f} at {worst[1]}; "
              f"II min {min(ours[('II', s)] for s in S_VALUES):.3g}, IV min {min(ours[('IV', s)] for s in S_VALUES):.3g}, "
              f"smooth max {max(ours[(t, s)] for t in SMOOTH for s in S_VALUES):.3g}")
    return ok_factor and ok_sep, detail


def criterion_5():
    ii = sweep_kw("II", s=1.0).compression_final
    i = sweep_kw("I", s=1.0)
    i_1e4 = float(i.compression_final[list(i.epsilons).index(1e-4)])
    ok = bool(np.all(ii > 90.0)) and i_1e4 > 90.0
    return ok, "test II " + ", ".join(f"{c:.1f}%" for c in ii) + f"; test I at 1e-4 {i_1e4:.1f}%"


def criterion_6():
    leaves = sweep_kw("V", TEST_V_EPSILONS, collision="leaves")
    recon = sweep_kw("V", TEST_V_EPSILONS, collision="reconstructed")
    el, er = leaves.e_final[:, 0], recon.e_final[:, 0]
    stagnation = float(el[0] / el[-1])
    slope = loglog_fit(recon.epsilons, er).slope
    gap = float(el[1] / er[1])
    ok = stagnation < 2.0 and slope >= 0.7 and gap >= 5.0
    return ok, (f"leaves e(1e-5)/e(1e-7) {stagnation:.2f} (need < 2); reconstructed slope {slope:.3f}; "
                f"leaves/reconstructed at 1e-6 {gap:.1f}")


def criterion_7():
    ok, parts = True, []
    for label, name, kw in (("D1Q5 s2=1.0", "sw-d1q5", {"s": 1.0}), ("D1Q5 s2=1.6", "sw-d1q5", {"s": 1.6}),
                            ("Sod", "sod", {})):
        try:
            res = sweep_kw(name, **kw)
        except FloatingPointError as exc:
            ok = False
            parts.append(f"{label} unstable ({exc})")
            continue
        stable = all(np.all(np.isfinite(r.final_adaptive)) for r in res.reports)
        slopes = res.slopes
        comp = float(res.compression_final[list(res.epsilons).index(1e-4)])
        ok &= stable and bool(np.all((slopes >= 0.7) & (slopes <= 1.3))) and comp > 80.0
        parts.append(f"{label} slopes {' '.join(f'{x:.2f}' for x in slopes)} compression at 1e-4 {comp:.1f}%")
    return ok, "; ".join(parts)


def _conservation_drift(name: str) -> float:
    cfg = preset(name, boundary="periodic").validate()
    spec = cfg.build_scheme()
    g = cfg.geometry
    state = initial_state(g, spec, cfg.initial_datum().on_geometry(g), make_policy(cfg, spec), cfg.collision,
                          "periodic")
    mass0 = spec.conserved(state.field.values).T @ state.field.widths
    drift = 0.0
    for _ in range(1000):
        state = adaptive_step(state)
        mass = spec.conserved(state.field.values).T @ state.field.widths
        drift = max(drift, float(np.max(np.abs(mass - mass0) / np.maximum(np.abs(mass0), 1.0))))
    return drift


def _random_graded_trees(gamma, count, rng, boundary="copy"):
    g = MeshGeometry(0.0, 1.0, 2, 7)
    for _ in range(count):
        idx = [(j, int(rng.integers(0, g.n_cells(j)))) for j in rng.integers(3, 8, size=int(rng.integers(1, 10)))]
        yield grade(MeshTree.from_indices(g, idx), gamma, boundary)


def criterion_8():
    rng = np.random.default_rng(2024)
    checks = {}

    exact = 0.0
    for gamma in (1, 2, 3):
        for degree in range(2 * gamma + 1):
            c = rng.normal(size=degree + 1)
            prim = np.polynomial.Polynomial(c).integ()
            window = [prim(k + 0.5) - prim(k - 0.5) for k in range(-gamma, gamma + 1)]
            even, odd = predict(window, gamma)
            exact = max(exact, abs(even - 2 * (prim(0.0) - prim(-0.5))), abs(odd - 2 * (prim(0.5) - prim(0.0))))
    checks["prediction exactness"] = (exact, exact <= 1e-13)

    round_trip = 0.0
    redundancy = 0.0
    grading_ok = True
    for gamma in (1, 2, 3):
        for boundary in ("copy", "periodic"):
            for tree in _random_graded_trees(gamma, 10, rng, boundary):
                field = LeafField(tree, rng.normal(size=(tree.n_complete_leaves, 2)))
                coarse, details = encode(field, gamma, boundary)
                round_trip = max(round_trip, float(np.abs(decode(coarse, details, gamma, boundary).values
                                                          - field.values).max()))
                levels = complete_levels(field, gamma, boundary)
                for j in range(3, 8):
                    d = levels[j] - predict_level(levels[j - 1], gamma, boundary)
                    redundancy = max(redundancy, float(np.abs(d[1::2] + d[0::2]).max()))
                graded = grade(tree, gamma, boundary)
                grading_ok &= graded == tree and grade(graded, gamma, boundary) == graded
                bigger = grade(tree.union(MeshTree.full(tree.geometry)), gamma, boundary)
                grading_ok &= tree.issubset(bigger) and graded.is_graded(gamma, boundary)
    checks["encode/decode round trip"] = (round_trip, round_trip <= 1e-14)
    checks["detail redundancy"] = (redundancy, redundancy <= 1e-12)
    checks["grading idempotent/monotone/extensive"] = (0.0, grading_ok)

    drift = {name: _conservation_drift(name) for name in ("V", "sw-d1q3")}
    checks["periodic drift (Burgers, SW)"] = (max(drift.values()), max(drift.values()) <= 1e-12)

    lin = 0.0
    spec = build_d1q2(ScalarFlux("advection", 0.75), 1.0, 1.5)
    for tree in _random_graded_trees(1, 20, rng):
        field = LeafField(tree, rng.normal(size=(tree.n_complete_leaves, 2)))
        lin = max(lin, float(np.abs(collide_leaves(field, spec).values - collide_reconstructed(field, spec).values).max()))
    checks["linear-kernel collision equality"] = (lin, lin <= 1e-13)

    ok = all(v[1] for v in checks.values())
    return ok, "; ".join(f"{k} {'ok' if v[1] else 'BAD'} ({v[0]:.1e})" for k, v in checks.items())


def criterion_9():
    study = accumulation_study(preset("I", s=1.5))
    ok = study.linear.r2 >= 0.95 and study.below_bound
    return ok, (f"C_L {study.c_l:.3f}, fitted C_MR {study.c_mr:.3g}, linear R^2 {study.linear.r2:.4f}, "
                f"below bound {study.below_bound}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


@pytest.mark.slow
@pytest.mark.parametrize("number", list(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    emit(number, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, check in CRITERIA.items():
        ok, detail = check()
        emit(number, ok, detail)
        failures += not ok
    sys.exit(1 if failures else 0)
