import numpy as np
import pytest

from conftest import constant_measure, quadratic
from cmalab.calculus import DiscreteMeasure, GridFunction, monge_ampere
from cmalab.energy import energy_ep, functional_J
from cmalab.families import random_family
from cmalab.grid import build_domain
from cmalab.measures import gaussian_bump
from cmalab.solver import SolveOptions, solve_dirichlet
from cmalab.verify import (check_comparison, check_condition3_membership, check_condition4_compactness,
                           check_energy_derivative, check_holder, check_J_envelope_derivative,
                           check_lipschitz, check_theoremB_optimality, check_triangle, check_uniqueness,
                           _report, comparison_sides, derivative_quotients, epsilon_net_size, richardson)


def test_richardson_linear():
    q = lambda t: 3.0 + 2.0 * t  # noqa: E731
    assert richardson([1e-2, 1e-3], [q(1e-2), q(1e-3)]) == pytest.approx(3.0, rel=1e-14)


def test_derivative_closed_form(disc129):
    u = quadratic(disc129)
    rep = check_energy_derivative(u, u)
    assert rep.passed
    S = rep.details[0]["S"]
    assert abs(S - 4 * np.pi) / (4 * np.pi) <= 4 * disc129.h
    # f(t) = (1 + t)^2 e_1(u): the positive-side slope is 2 e_1(u) after extrapolation
    assert rep.details[0]["extrapolated"] == pytest.approx(2 * energy_ep(u), rel=1e-9)


def test_derivative_zero_direction(disc65):
    u = quadratic(disc65)
    q = derivative_quotients(u, GridFunction.zeros(disc65), (0.1, -0.1, 0.01, -0.01))
    assert q["pos"][1] == [0.0, 0.0] and q["neg"][1] == [0.0, 0.0]


@pytest.mark.parametrize("preset,res", [("disc", 65), ("ball", 11)])
def test_derivative_random_pairs(preset, res):
    d = build_domain(preset, res)
    fam = random_family(d, 6, 101)
    for i in range(5):
        rep = check_energy_derivative(fam[i], fam[i + 1])
        assert rep.passed, rep.details
        two = rep.details[-1]
        assert two["two_sided_difference"] <= two["allowed"]


def test_J_envelope_derivative_at_solution(disc65):
    u = quadratic(disc65)
    mu = monge_ampere(u)
    v = random_family(disc65, 1, 3)[0]
    rep = check_J_envelope_derivative(u, v, mu)
    assert rep.passed
    assert abs(rep.details[0]["rhs"]) < 1e-10
    zero = check_J_envelope_derivative(u, GridFunction.zeros(disc65), mu)
    assert zero.details[0]["slope"] == 0.0 and zero.details[0]["rhs"] == 0.0


@pytest.mark.parametrize("preset,res", [("disc", 65), ("ball", 11)])
def test_J_envelope_derivative_random(preset, res):
    d = build_domain(preset, res)
    fam = random_family(d, 7, 202)
    for i in range(5):
        assert check_J_envelope_derivative(fam[i], fam[i + 1], monge_ampere(fam[i + 2])).passed


def test_J_envelope_derivative_rejects_positive(disc65):
    u = quadratic(disc65)
    with pytest.raises(ValueError):
        check_J_envelope_derivative(u, u, monge_ampere(u), ts=(0.1,))


def test_comparison_empty_sublevel(disc65):
    u, w = quadratic(disc65), quadratic(disc65, 0.5)
    assert comparison_sides(u, u, w) == (0.0, 0.0)


def test_comparison_closed_form(disc129):
    # u = (|z|^2-1)/2, w = |z|^2-1, v = u: LHS = int (1-|z|^2) = pi/2, RHS = pi
    u, w = quadratic(disc129, 0.5), quadratic(disc129)
    lhs, rhs = comparison_sides(u, u, w)
    h = disc129.h
    assert abs(lhs - np.pi / 2) / (np.pi / 2) <= 4 * h
    assert abs(rhs - np.pi) / np.pi <= 4 * h
    rep = check_comparison(u, u, w)
    assert rep.passed and abs(rep.worst_gap - np.pi / 2) / (np.pi / 2) <= 4 * h


@pytest.mark.parametrize("preset,res", [("disc", 65), ("ball", 11), ("polydisc", 9)])
def test_comparison_random(preset, res):
    d = build_domain(preset, res)
    fam = random_family(d, 12, 303)
    for i in range(10):
        assert check_comparison(fam[i], fam[i + 1], fam[i + 2]).passed


def test_optimality_examples(disc129):
    u = quadratic(disc129)
    mu = constant_measure(disc129, 4.0)
    Ju = functional_J(u, mu)
    # J(2u) = 4 e_1(u) / 2 - 2 int(-2u) 4 dlambda = 0 in the continuum
    assert abs(functional_J(2 * u, mu)) <= 4 * disc129.h * np.pi
    assert abs(Ju + np.pi) / np.pi <= 4 * disc129.h
    rep = check_theoremB_optimality(u, mu, samples=200, seed=0)
    assert rep.passed and rep.samples == 200


def test_optimality_detects_non_minimizer(disc65):
    u = quadratic(disc65)
    rep = check_theoremB_optimality(2 * u, constant_measure(disc65, 4.0), samples=20, seed=0)
    assert not rep.passed


def test_uniqueness_disc(disc65):
    rep = check_uniqueness(constant_measure(disc65, 4.0))
    assert rep.passed, rep.details


def test_uniqueness_zero(disc65):
    rep = check_uniqueness(DiscreteMeasure.zero(disc65))
    assert rep.passed and rep.worst_gap == 0.0


def test_uniqueness_ball():
    d = build_domain("ball", 9)
    rep = check_uniqueness(constant_measure(d, 32.0), opts=SolveOptions(tol_residual=1e-5))
    assert rep.passed, rep.details


def test_uniqueness_needs_three_starts(disc65):
    with pytest.raises(ValueError):
        check_uniqueness(constant_measure(disc65, 4.0), starts=("zero", 1))


def test_uniqueness_fails_on_nonconvergence(disc65):
    rep = check_uniqueness(monge_ampere(random_family(disc65, 1, 5)[0]),
                           opts=SolveOptions(max_iters=1, tol_residual=1e-14))
    assert rep.verdict == "fail" and "did not converge" in rep.note


def test_condition3(disc129):
    assert check_condition3_membership(constant_measure(disc129, 4.0)).passed
    assert check_condition3_membership(DiscreteMeasure.zero(disc129)).passed
    assert not check_condition3_membership(gaussian_bump(disc129, 0.003)).passed


def test_epsilon_net():
    assert epsilon_net_size(np.zeros((5, 5)), 0.1) == 1
    d = np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0)))
    assert epsilon_net_size(d, 0.5) == 4


def test_condition4_demonstrator(disc65):
    mu = constant_measure(disc65, 4.0)
    u, v = random_family(disc65, 2, 8)
    const = check_condition4_compactness(mu, [u] * 6)
    assert const.details[0]["net_size"] == 1 and const.verdict == "info"
    conv = check_condition4_compactness(mu, [u + (1.0 / k) * v for k in range(10, 30)])
    assert conv.details[0]["net_size"] <= 2
    rnd = check_condition4_compactness(mu, length=8, seed=1)
    assert rnd.passed and rnd.verdict == "info"


@pytest.mark.parametrize("preset,res", [("disc", 65), ("ball", 11)])
def test_sampled_suites(preset, res):
    d = build_domain(preset, res)
    assert check_holder(d, 20, 1).passed
    assert check_triangle(d, 20, 1).passed
    assert check_lipschitz(d, 5, 1).passed


def test_reports_are_pure(disc65):
    a = check_holder(disc65, 10, 4)
    b = check_holder(disc65, 10, 4)
    assert a == b


def test_verdict_rule():
    assert _report("x", [0.5, -0.1], 0.1, [{}]).verdict == "pass"
    assert _report("x", [0.5, -0.2], 0.1, [{}]).verdict == "fail"
    assert _report("x", [-5.0], 0.0, [{}], informational=True).passed
