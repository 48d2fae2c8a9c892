"""Continuation of eigenvalues along q-paths and the resulting permutations."""

import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import math

import numpy as np
import pytest

from lamespec.errors import ParityMismatchError
from lamespec.services import continuation as cont
from lamespec.services import elliptic as ell
from lamespec.services import monodromy as mono
from lamespec.services.perturbation import evaluate, expand
from lamespec.services.reference import ANCHOR_MODULI, CYCLE_PERMUTATIONS
from lamespec.services.trig_basis import ModelParams


PI = math.pi
N1 = ModelParams(1)
A0 = 0.258666 + 0.697448j


# ── helpers ──────────────────────────────────────────────────

def _series(m, k_max=20):
    return expand(m, k_max, N1)[0]


def _state(m, q=0.1, k_max=20):
    return cont.init_state(m, q, _series(m, k_max))


def _perm(mapping, anchor=A0, rho=0.02):
    return cont.PermutationResult(anchor, sorted(mapping), dict(mapping), rho)


# ── tests ────────────────────────────────────────────────────

class TestPaths:
    def test_polyline_step(self):
        path = cont.PathSpec.polyline([0.1, 0.3], line_step=0.005)
        assert len(path.nodes) >= 41
        assert path.nodes[0] == 0.1 and path.nodes[-1] == pytest.approx(0.3)
        assert np.max(np.abs(np.diff(path.nodes))) <= 0.005 + 1e-15

    def test_zero_length_polyline(self):
        path = cont.PathSpec.polyline([0.2, 0.2])
        assert len(path.nodes) == 1
        assert list(path.s) == [0.0]

    def test_cycle_is_closed(self):
        path = cont.PathSpec.cycle(A0, 0.02, 0.2, steps=64)
        assert path.nodes[0] == path.nodes[-1] == 0.2
        assert path.kind == "cycle"
        assert path.meta["anchor"] == A0
        ring = np.abs(path.nodes - A0)
        assert np.min(ring) == pytest.approx(0.02)
        assert np.all(np.abs(path.nodes) < 1)

    def test_cycle_turns_once_anticlockwise(self):
        path = cont.PathSpec.cycle(A0, 0.02, 0.2, steps=64)
        angles = np.unwrap(np.angle(path.nodes - A0))
        assert (angles[-1] - angles[0]) == pytest.approx(2 * PI)

    def test_arclength_parameter(self):
        s = cont.PathSpec.polyline([0.1, 0.2, 0.2 + 0.1j]).s
        assert s[0] == 0.0 and s[-1] == pytest.approx(1.0)
        assert np.all(np.diff(s) > 0)

    def test_reversed(self):
        path = cont.PathSpec.polyline([0.1, 0.2j])
        back = path.reversed()
        assert back.nodes[0] == path.nodes[-1]
        assert back.meta["reversed"]

    def test_rejects_bad_paths(self):
        with pytest.raises(ValueError):
            cont.PathSpec.polyline([0.5, 1.2])
        with pytest.raises(ValueError):
            cont.PathSpec("polyline", [0.0, 0.1])
        with pytest.raises(ValueError):
            cont.PathSpec.cycle(0.5 + 0.01j, 0.02, 0.2)


class TestInitState:
    @pytest.mark.parametrize("m_index", [0, 2, 4])
    def test_periodic_family(self, m_index):
        p = _state(m_index)
        assert p.m % 2 == 0
        assert abs(p.m) == m_index + 2
        r1, r2 = p.residuals(ell.make_context(p.q))
        assert r1 <= 1e-9 * (1 + abs(p.E))
        assert r2 <= 1e-9

    @pytest.mark.parametrize("m_index", [1, 3])
    def test_antiperiodic_family(self, m_index):
        assert _state(m_index).m % 2 == 1

    def test_energy_matches_series(self):
        p = _state(2)
        assert abs(p.E - evaluate(_series(2), 0.1)) <= 1e-10 * abs(p.E)

    def test_multiplier_sign(self):
        for m_index, want in ((0, 2), (1, -2)):
            p = _state(m_index, q=0.15)
            trace, _ = mono.ode_multiplier(p.q, p.E)
            assert abs(trace - want) < 1e-8

    def test_wrong_series_is_rejected(self):
        # the E_1 value cannot sit on an even sheet
        with pytest.raises(ParityMismatchError):
            cont.init_state(0, 0.1, _series(1))


class TestContinueAlong:
    def test_constant_path(self):
        p = _state(0, q=0.2)
        traj = cont.continue_along(p, cont.PathSpec.polyline([0.2, 0.2]))
        assert traj.final == traj.initial
        assert traj.halvings == 0

    def test_real_axis_matches_series(self):
        p = _state(0)
        traj = cont.continue_along(p, cont.PathSpec.polyline([0.1, 0.3]))
        want = evaluate(_series(0, 24), 0.3)
        assert abs(traj.final.q - 0.3) < 1e-15
        assert abs(traj.final.E - want) <= 1e-8 * abs(want)

    def test_states_keep_residuals_and_parity(self):
        p = _state(1)
        traj = cont.continue_along(p, cont.PathSpec.polyline([0.1, 0.2 + 0.1j]))
        for st in traj.states:
            _, r2 = st.residuals(ell.make_context(st.q))
            assert r2 <= 1e-9
            assert st.m % 2 == 1

    def test_every_state_is_residual_checked(self):
        p = _state(0)
        path = cont.PathSpec.polyline([0.1, 0.12])
        assert cont.continue_along(p, path).residual_violations == []
        strict = cont.continue_along(p, path, opts={"residual_tol": 1e-30})
        assert len(strict.residual_violations) >= len(strict.states) - 1
        assert [s for s, _ in strict.residual_violations] == sorted(s for s, _ in strict.residual_violations)

    def test_reversible(self):
        p = _state(2)
        path = cont.PathSpec.polyline([0.1, 0.2 + 0.05j, 0.15 + 0.12j])
        there = cont.continue_along(p, path)
        back = cont.continue_along(there.final, path.reversed())
        assert abs(back.final.E - p.E) <= 1e-7 * abs(p.E)

    def test_path_must_start_at_state(self):
        with pytest.raises(ValueError):
            cont.continue_along(_state(0), cont.PathSpec.polyline([0.2, 0.3]))

    def test_records(self):
        traj = cont.continue_along(_state(0), cont.PathSpec.polyline([0.1, 0.12]))
        recs = traj.records()
        assert len(recs) == len(traj.path.nodes)
        assert set(recs[0]) == {"s", "q", "E", "t0", "m"}
        assert recs[-1]["s"] == pytest.approx(1.0)


class TestPermutationResult:
    def test_notation_and_cycles(self):
        r = _perm({0: 2, 2: 0, 4: 4, 6: 6})
        assert r.notation() == "(0 2)(4)(6)"
        assert r.notation(fixed=False) == "(0 2)"
        assert r.cycles() == [(0, 2), (4,), (6,)]
        assert r.moved() == [0, 2]
        assert r.parity == "even"

    def test_to_dict(self):
        d = _perm({1: 3, 3: 1, 5: 5, 7: 7}, anchor=0.535905 + 0.640487j).to_dict()
        assert d["parity"] == "odd"
        assert d["perm"] == [[1, 3], [3, 1], [5, 5], [7, 7]]
        assert d["anchor"] == [0.535905, 0.640487]

    def test_to_dict_without_anchor(self):
        r = cont.PermutationResult(None, [0, 2], {0: 0, 2: 2}, None)
        assert r.to_dict()["anchor"] is None


class TestLoopPermutation:
    def test_zero_length_loop_is_identity(self):
        path = cont.PathSpec.polyline([0.2, 0.2])
        res = cont.loop_permutation(path, [0, 2, 4], series_k_max=14)
        assert res.mapping == {0: 0, 2: 2, 4: 4}
        assert res.anchor is None

    def test_small_loop_without_branch_point_is_identity(self):
        path = cont.PathSpec.polyline([0.2, 0.25 + 0.05j, 0.2 + 0.1j, 0.15 + 0.05j, 0.2])
        res = cont.loop_permutation(path, [1, 3], series_k_max=14)
        assert res.mapping == {1: 1, 3: 3}

    def test_rejects_mixed_parity(self):
        with pytest.raises(ValueError):
            cont.loop_permutation(cont.PathSpec.polyline([0.2, 0.2]), [0, 1])

    def test_rejects_open_path(self):
        with pytest.raises(ValueError):
            cont.loop_permutation(cont.PathSpec.polyline([0.2, 0.3]), [0, 2])

    @pytest.mark.slow
    @pytest.mark.parametrize("anchor", list(CYCLE_PERMUTATIONS))
    def test_cycle_permutations(self, anchor):
        want = CYCLE_PERMUTATIONS[anchor]
        res = cont.monodromy_permutation(anchor, sorted(want))
        assert res.mapping == want

    @pytest.mark.slow
    @pytest.mark.parametrize("rho", [0.01, 0.04])
    def test_permutation_stable_in_radius(self, rho):
        res = cont.monodromy_permutation(A0, [0, 2, 4, 6], rho=rho)
        assert res.mapping == CYCLE_PERMUTATIONS[A0]


class TestEvidence:
    def test_connectivity(self):
        results = [_perm({0: 2, 2: 0, 4: 4, 6: 6}), _perm({0: 4, 2: 2, 4: 0, 6: 6})]
        assert cont.connectivity_evidence(results) == [[0, 2, 4], [6]]

    def test_connectivity_empty(self):
        assert cont.connectivity_evidence([]) == []

    def test_compatibility(self):
        radii = {0: 0.749, 2: 0.749, 4: 0.875}
        rows = cont.compatibility_report([_perm({0: 2, 2: 0, 4: 4, 6: 6})], radii)
        assert [r["index"] for r in rows] == [0, 2]
        for r in rows:
            assert r["abs_anchor"] == pytest.approx(ANCHOR_MODULI[A0], abs=1e-5)
            assert r["consistent"] and r["tight"]

    def test_incompatible_radius_is_flagged(self):
        rows = cont.compatibility_report([_perm({0: 2, 2: 0})], {0: 0.9, 2: 0.749})
        by_index = {r["index"]: r for r in rows}
        assert not by_index[0]["consistent"]
        assert by_index[2]["consistent"]

    def test_path_results_are_skipped(self):
        r = cont.PermutationResult(None, [0, 2], {0: 2, 2: 0}, None)
        assert cont.compatibility_report([r], {0: 0.7, 2: 0.7}) == []
