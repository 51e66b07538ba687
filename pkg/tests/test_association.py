import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glmbtrack import lap
from glmbtrack.association import (
    AssociationProblem,
    build_cost_matrix,
    dedup_rank,
    enumerate_assignments,
    gibbs_conditional,
    gibbs_sample,
    is_positive_one_one,
    murty_ranked,
    recover,
    weight_of,
)
from glmbtrack.core import Label


def random_problem(rng, n_rows, n_meas, scale=1.0):
    return AssociationProblem(rng.normal(0.0, scale, (n_rows, n_meas + 2)), n_rows)


def enumerated_target(problem):
    states = list(enumerate_assignments(problem.P, problem.M))
    w = np.array([math.exp(weight_of(problem, g)) for g in states])
    return states, w / w.sum()


# ---------------------------------------------------------------- problem type

def test_problem_rejects_nonpositive_eta():
    with pytest.raises(ValueError):
        AssociationProblem.from_eta(np.array([[1.0, 0.0, 1.0]]), 1)
    with pytest.raises(ValueError):
        AssociationProblem(np.array([[0.0, -np.inf, 0.0]]), 1)


def test_problem_eta_view_roundtrip(rng):
    eta = rng.uniform(0.1, 2.0, (3, 5))
    problem = AssociationProblem.from_eta(eta, 2)
    np.testing.assert_allclose(problem.eta, eta, rtol=1e-12)
    assert problem.P == 3 and problem.M == 3 and problem.R == 2


# -------------------------------------------------------------------- recover

def test_recover_direct_example():
    labels = (Label(0, 1), Label(0, 2), Label(0, 3))
    problem = AssociationProblem(np.zeros((3, 4)), 3, labels)
    kept, assoc = recover(problem, np.array([-1, 0, 2]))
    assert kept == (Label(0, 2), Label(0, 3))
    assert assoc == {Label(0, 2): 0, Label(0, 3): 2}


def test_recover_all_dead():
    problem = AssociationProblem(np.zeros((3, 4)), 3)
    kept, assoc = recover(problem, np.array([-1, -1, -1]))
    assert kept == () and assoc == {}


def test_recover_rejects_invalid_vector():
    problem = AssociationProblem(np.zeros((2, 4)), 2)
    with pytest.raises(ValueError):
        recover(problem, np.array([1, 1]))


def test_recover_is_injective_over_enumeration():
    # every vector over P=3, M=2; images must be distinct and valid
    problem = AssociationProblem(np.zeros((3, 4)), 3)
    images = set()
    count = 0
    for gamma in itertools.product(range(-1, 3), repeat=3):
        if not is_positive_one_one(gamma):
            continue
        kept, assoc = recover(problem, np.array(gamma))
        positives = [v for v in assoc.values() if v > 0]
        assert len(set(positives)) == len(positives)
        images.add((kept, tuple(sorted((l, j) for l, j in assoc.items()))))
        count += 1
    assert len(images) == count


# ------------------------------------------------------------------ weight_of

def test_weight_single_row():
    problem = AssociationProblem(np.log([[0.2, 0.3, 0.5]]), 1)
    assert weight_of(problem, np.array([1])) == pytest.approx(math.log(0.5))
    assert weight_of(problem, np.array([-1])) == pytest.approx(math.log(0.2))


def test_weight_infeasible_is_minus_infinity():
    problem = AssociationProblem(np.zeros((2, 4)), 2)
    assert weight_of(problem, np.array([2, 2])) == -np.inf


def test_weight_matches_linear_product_oracle(rng):
    problem = random_problem(rng, 5, 3)
    eta = problem.eta
    for gamma in itertools.product(range(-1, 4), repeat=5):
        expected = 1.0
        for i, g in enumerate(gamma):
            expected *= eta[i, g + 1]
        if not is_positive_one_one(gamma):
            assert weight_of(problem, gamma) == -np.inf
        else:
            got = math.exp(weight_of(problem, np.array(gamma)))
            assert got == pytest.approx(expected, rel=1e-12)


# ----------------------------------------------------------- gibbs conditional

def test_conditional_masks_taken_measurement():
    problem = AssociationProblem.from_eta(np.array([[1.0, 1.0, 2.0]] * 2), 2)
    probs = gibbs_conditional(problem, 0, np.array([1]))
    np.testing.assert_allclose(probs, [0.5, 0.5, 0.0])


def test_conditional_without_positive_entries_is_row_proportional(rng):
    problem = random_problem(rng, 3, 2)
    probs = gibbs_conditional(problem, 1, np.array([0, -1]))
    expected = problem.eta[1] / problem.eta[1].sum()
    np.testing.assert_allclose(probs, expected, atol=1e-12)


def test_conditional_matches_exhaustive_joint(rng):
    # P=3, M=2: compare against the conditional of the enumerated target
    problem = random_problem(rng, 3, 2)
    states, target = enumerated_target(problem)
    lookup = {tuple(g): t for g, t in zip(states, target)}
    for n in range(3):
        for others in itertools.product(range(-1, 3), repeat=2):
            if not is_positive_one_one(others):
                continue
            mass = np.zeros(4)
            for j in range(-1, 3):
                full = list(others[:n]) + [j] + list(others[n:])
                mass[j + 1] = lookup.get(tuple(full), 0.0)
            got = gibbs_conditional(problem, n, np.array(others))
            np.testing.assert_allclose(got, mass / mass.sum(), atol=1e-12)


# --------------------------------------------------------------- gibbs_sample

def test_single_sample_returns_initial_vector(rng):
    problem = random_problem(rng, 4, 2)
    init = np.array([0, 1, -1, 0])
    out = gibbs_sample(problem, init, 1, 0)
    assert out.shape == (1, 4)
    np.testing.assert_array_equal(out[0], init)


def test_chain_is_deterministic_given_seed(rng):
    problem = random_problem(rng, 4, 3)
    a = gibbs_sample(problem, np.zeros(4, dtype=int), 500, 42)
    b = gibbs_sample(problem, np.zeros(4, dtype=int), 500, 42)
    np.testing.assert_array_equal(a, b)


def test_chain_rejects_bad_inputs(rng):
    problem = random_problem(rng, 3, 2)
    with pytest.raises(ValueError):
        gibbs_sample(problem, np.zeros(3, dtype=int), 0, 0)
    with pytest.raises(ValueError):
        gibbs_sample(problem, np.array([1, 1, 0]), 5, 0)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_chain_never_leaves_feasible_set(seed):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng, int(rng.integers(2, 6)), int(rng.integers(0, 5)))
    samples = gibbs_sample(problem, np.zeros(problem.P, dtype=int), 60, seed)
    assert all(is_positive_one_one(g) for g in samples)


def test_empirical_distribution_approaches_target(rng):
    problem = random_problem(rng, 2, 2, scale=0.7)
    states, target = enumerated_target(problem)
    samples = gibbs_sample(problem, np.zeros(2, dtype=int), 200_000, 7)
    keys = {tuple(g): i for i, g in enumerate(states)}
    counts = np.zeros(len(states))
    for g in samples:
        counts[keys[tuple(g)]] += 1
    tv = 0.5 * np.abs(counts / counts.sum() - target).sum()
    assert tv < 0.01


# ------------------------------------------------------------- lemma identity

def indicator_factorization_holds(gamma, n, n_meas):
    """The coordinate-wise factorization of the feasibility indicator."""
    others = gamma[:n] + gamma[n + 1 :]
    lhs = 1 if is_positive_one_one(gamma) else 0
    rhs = 1 if is_positive_one_one(others) else 0
    for g in others:
        rhs *= 1 - (1 if (1 <= gamma[n] <= n_meas and g == gamma[n]) else 0)
    return lhs == rhs


def test_indicator_factorization_exhaustive():
    for P in range(1, 5):
        for M in range(0, 4):
            for gamma in itertools.product(range(-1, M + 1), repeat=P):
                for n in range(P):
                    assert indicator_factorization_holds(gamma, n, M)


# ------------------------------------------------------- convergence (bound)

def chain_transition_matrix(problem):
    """Exact one-sweep transition matrix over the feasible set."""
    states = list(enumerate_assignments(problem.P, problem.M))
    index = {tuple(g): i for i, g in enumerate(states)}
    T = np.zeros((len(states), len(states)))
    for a, start in enumerate(states):
        # enumerate all sweep outcomes with their probabilities
        frontier = [(list(start), 1.0)]
        for n in range(problem.P):
            new_frontier = []
            for state, prob in frontier:
                others = np.array(state[:n] + state[n + 1 :])
                cond = gibbs_conditional(problem, n, others)
                for j in range(-1, problem.M + 1):
                    p = cond[j + 1]
                    if p > 0:
                        nxt = list(state)
                        nxt[n] = j
                        new_frontier.append((nxt, prob * p))
            frontier = new_frontier
        for state, prob in frontier:
            T[a, index[tuple(state)]] += prob
    return states, T


def test_transition_matrix_rows_are_distributions(rng):
    problem = random_problem(rng, 2, 1)
    _, T = chain_transition_matrix(problem)
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)


def test_stationary_distribution_is_the_target(rng):
    problem = random_problem(rng, 2, 1)
    states, T = chain_transition_matrix(problem)
    _, target = enumerated_target(problem)
    np.testing.assert_allclose(target @ T, target, atol=1e-12)


def test_geometric_convergence_bound(rng):
    # two-step minorization: deviation of the j-step kernel from the target
    # is bounded by (1 - 2*beta)^floor(j/2), beta = min two-step entry
    problem = random_problem(rng, 2, 1)
    states, T = chain_transition_matrix(problem)
    _, target = enumerated_target(problem)
    beta = (T @ T).min()
    assert beta > 0
    Tj = np.eye(len(states))
    for j in range(1, 21):
        Tj = Tj @ T
        if j >= 2:
            dev = np.abs(Tj - target[None, :]).max()
            assert dev <= (1 - 2 * beta) ** (j // 2) + 1e-12


# ---------------------------------------------------------------- cost matrix

def test_cost_matrix_single_row_layout():
    problem = AssociationProblem(np.log([[0.2, 0.3, 0.5]]), 1)
    C = build_cost_matrix(problem)
    assert C.shape == (1, 3)
    np.testing.assert_allclose(C[0], [-math.log(0.5), -math.log(0.3), -math.log(0.2)])
    assert np.all(np.isfinite(C))


def test_cost_matrix_block_structure(rng):
    P, M = 2, 3
    problem = random_problem(rng, P, M)
    C = build_cost_matrix(problem)
    assert C.shape == (P, M + 2 * P)
    assert np.all(np.isfinite(C[:, :M]))
    for i in range(P):
        for j in range(2 * P):
            col = M + j
            finite = np.isfinite(C[i, col]) and C[i, col] < lap.INFEASIBLE
            assert finite == (col in (M + i, M + P + i))


def test_cost_of_encoded_assignment_equals_negative_weight(rng):
    problem = random_problem(rng, 4, 3)
    C = build_cost_matrix(problem)
    for _ in range(50):
        gamma = None
        while gamma is None or not is_positive_one_one(gamma):
            gamma = rng.integers(-1, 4, size=4)
        cost = 0.0
        for i, g in enumerate(gamma):
            if g >= 1:
                cost += C[i, g - 1]
            elif g == 0:
                cost += C[i, 3 + i]
            else:
                cost += C[i, 3 + 4 + i]
        assert cost == pytest.approx(-weight_of(problem, gamma), rel=1e-12)


# --------------------------------------------------------------- murty_ranked

def test_murty_single_row_orders_by_eta():
    problem = AssociationProblem(np.log([[0.2, 0.3, 0.5]]), 1)
    got = [int(g[0]) for g in murty_ranked(problem, 5)]
    assert got == [1, 0, -1]


def test_murty_top_one_is_the_optimum(rng):
    for _ in range(20):
        problem = random_problem(rng, 3, 3)
        best = murty_ranked(problem, 1)[0]
        expected = max(
            enumerate_assignments(3, 3), key=lambda g: weight_of(problem, g)
        )
        assert weight_of(problem, best) == pytest.approx(weight_of(problem, expected))


def test_murty_matches_enumeration_order(rng):
    for _ in range(50):
        P = int(rng.integers(1, 4))
        M = int(rng.integers(0, 4))
        problem = random_problem(rng, P, M)
        oracle = sorted(
            enumerate_assignments(P, M), key=lambda g: -weight_of(problem, g)
        )
        got = murty_ranked(problem, 20)
        k = min(20, len(oracle))
        assert len(got) == k
        got_w = [weight_of(problem, g) for g in got]
        assert all(got_w[i] >= got_w[i + 1] - 1e-12 for i in range(k - 1))
        np.testing.assert_allclose(
            got_w, [weight_of(problem, g) for g in oracle[:k]], atol=1e-10
        )
        assert len({g.tobytes() for g in got}) == k


def test_murty_exhausts_small_problems(rng):
    problem = random_problem(rng, 2, 1)
    all_feasible = list(enumerate_assignments(2, 1))
    got = murty_ranked(problem, 100)
    assert len(got) == len(all_feasible)


# ----------------------------------------------------------------- dedup_rank

def test_dedup_keeps_best_first(rng):
    problem = random_problem(rng, 2, 2)
    g1 = np.array([1, 2])
    g2 = np.array([0, 0])
    better, worse = sorted([g1, g2], key=lambda g: -weight_of(problem, g))
    out = dedup_rank([g1, g1, g2], problem)
    assert len(out) == 2
    np.testing.assert_array_equal(out[0], better)
    np.testing.assert_array_equal(out[1], worse)


def test_dedup_empty_input():
    problem = AssociationProblem(np.zeros((1, 3)), 1)
    assert dedup_rank([], problem) == []


def test_dedup_matches_set_then_sort_oracle(rng):
    problem = random_problem(rng, 3, 2)
    feasible = list(enumerate_assignments(3, 2))
    samples = [feasible[i] for i in rng.integers(0, len(feasible), size=10_000)]
    out = dedup_rank(samples, problem)
    expected_keys = {g.tobytes() for g in samples}
    assert {g.tobytes() for g in out} == expected_keys
    weights = [weight_of(problem, g) for g in out]
    assert all(weights[i] >= weights[i + 1] - 1e-12 for i in range(len(out) - 1))


# ----------------------------------------------- cross-solver consistency

def test_long_chain_finds_the_global_optimum(rng):
    # best distinct sample from a long run equals the ranked-assignment top-1
    for _ in range(5):
        problem = random_problem(rng, 3, 3)
        samples = gibbs_sample(problem, np.zeros(3, dtype=int), 100_000, 3)
        best_sampled = dedup_rank(samples, problem)[0]
        best_ranked = murty_ranked(problem, 1)[0]
        assert weight_of(problem, best_sampled) == pytest.approx(
            weight_of(problem, best_ranked), rel=1e-12
        )
