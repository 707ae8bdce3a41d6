import dataclasses

import numpy as np
import pytest

from reflectkit import paths as P
from reflectkit.errors import ContractError
from reflectkit.reflection import gen_skorokhod_map
from reflectkit.switch import SwitchConfig, solve_switch
from reflectkit.verification import (
    N_QMC,
    check_definition1,
    check_lemma_est1,
    check_lemma_est2,
    checkpoints,
    complementarity_excess,
)

from oracles import concatenation_driver, concatenation_regulator, random_path

EPS = 1e-9


def _bump(H, a, b, height):
    """Tent of the given height supported on [a, b]."""
    c = (a + b) / 2
    return P.polyline([0, a, c, b, H], [0, 0, height, 0, 0])


@pytest.fixture
def reflected():
    x = P.polyline([0, 1, 2, 3, 4, 5], [0.5, -0.5, 0.2, -1.0, 0.5, 1.0])
    F = P.identity_path(20.0)
    sol = gen_skorokhod_map(x, F)
    return x, F, sol


def test_checkpoints_cover_breakpoints_and_grid():
    x = concatenation_driver()
    c = checkpoints(8.0, x, extra=[1.23])
    assert set(x.times) <= set(c) and 1.23 in c and c[-1] == 8.0
    assert c.size >= N_QMC


def test_definition_passes_on_solution(reflected):
    x, F, sol = reflected
    rep = check_definition1(x, F, sol.y, sol.l, EPS)
    assert rep.passed and rep.worst_violation <= EPS
    assert rep.check_name == "def1"


def test_definition_detects_complementarity(reflected):
    x, F, sol = reflected
    # y > 0 on (4, 5]; add 0.01 to l there and to y to keep the identity
    step = P.polyline([0, 4.2, 4.4, 5], [0, 0, 0.01, 0.01])
    rep = check_definition1(x, F, P.add(sol.y, step), P.add(sol.l, step), EPS)
    assert not rep.passed and rep.worst_violation >= 0.01 - EPS


def test_definition_detects_negativity(reflected):
    x, F, sol = reflected
    rep = check_definition1(x, F, P.affine(sol.y, 1.0, -0.5), sol.l, EPS)
    assert not rep.passed and rep.worst_violation >= 0.5 - EPS


def test_definition_detects_bad_start(reflected):
    x, F, sol = reflected
    rep = check_definition1(x, F, P.affine(sol.y, 1, 0.1), P.affine(sol.l, 1, 0.1), EPS)
    assert not rep.passed


def test_definition_horizon_mismatch(reflected):
    x, F, sol = reflected
    with pytest.raises(ContractError):
        check_definition1(x, F, sol.y, P.restrict(sol.l, 3.0), EPS)


@pytest.mark.parametrize("b", [1e-7, 1e-3, 0.3])
def test_identity_violation_scales_with_bump(reflected, b):
    x, F, sol = reflected
    y = P.add(sol.y, _bump(5.0, 4.3, 4.7, b))
    rep = check_definition1(x, F, y, sol.l, EPS)
    assert not rep.passed and rep.worst_violation >= b - EPS


def test_complementarity_exact_on_pieces():
    y = P.polyline([0, 1, 2], [0, 1, 0])
    l = P.linear_path(0, 1, 2)
    total, _ = complementarity_excess(y, l, 0.5)
    assert total == pytest.approx(1.0)


# -- appendix bounds ---------------------------------------------------------------------


def test_bounds_hold_on_fixture():
    x, F = concatenation_driver(), concatenation_regulator()
    sol = solve_switch(x, F, SwitchConfig(delta=0.5, horizon=12.0))
    assert check_lemma_est1(sol, x, F, EPS).passed
    assert check_lemma_est2(sol, x, F, 0.5, EPS).passed


def test_bounds_without_events():
    x = P.polyline([0, 1, 2], [1.0, 0.5, 2.0])
    F = P.identity_path(3)
    sol = solve_switch(x, F, SwitchConfig(delta=0.1))
    r1 = check_lemma_est1(sol, x, F, EPS)
    assert r1.passed and r1.worst_violation == 0.0


def test_est1_detects_inflated_clock():
    x, F = concatenation_driver(), concatenation_regulator()
    sol = solve_switch(x, F, SwitchConfig(delta=0.5, horizon=12.0))
    bad = dataclasses.replace(sol, tB=P.add(sol.tB, P.constant_path(1.0, sol.horizon)))
    rep = check_lemma_est1(bad, x, F, EPS)
    assert not rep.passed and rep.worst_violation > 0.1


def test_est2_detects_injected_violation():
    x, F = concatenation_driver(), concatenation_regulator()
    sol = solve_switch(x, F, SwitchConfig(delta=0.5, horizon=12.0))
    rep = check_lemma_est2(sol, x, F, delta=-0.5, eps=EPS)  # bound raised by 1
    assert not rep.passed


def test_est2_reduces_for_continuous_inputs():
    x = P.polyline([0, 1, 2, 3, 4], [0.5, -1.0, 0.5, -0.5, 0.3])
    F = P.identity_path(20)
    sol = solve_switch(x, F, SwitchConfig(delta=0.2, horizon=4.0))
    assert P.max_negative_jump(x) == 0 and P.max_backslide(F) == 0
    assert check_lemma_est2(sol, x, F, 0.2, EPS).passed


@pytest.mark.parametrize("seed", range(20))
def test_bounds_on_random_step_instances(seed):
    rng = np.random.default_rng(seed)
    x = random_path(rng, 25, 60.0, kind="step")
    x = P.affine(x, 1.0, 0.3 - x.values[0])
    F = random_path(rng, 25, 300.0, kind="step", monotone=True)
    sol = solve_switch(x, F, SwitchConfig(delta=0.3, horizon=40.0))
    assert check_lemma_est1(sol, x, F, EPS).passed
    r2 = check_lemma_est2(sol, x, F, 0.3, EPS)
    assert r2.passed and r2.worst_violation == 0.0


def test_report_dict_roundtrip():
    x, F = concatenation_driver(), concatenation_regulator()
    sol = solve_switch(x, F, SwitchConfig(delta=0.5, horizon=12.0))
    d = check_lemma_est1(sol, x, F).to_dict()
    assert set(d) == {"passed", "worst_violation", "witness_time", "check_name"}
