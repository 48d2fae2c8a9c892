"""Monodromy exponent, its cross-checks, and the branch-point search."""

import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import cmath, math, warnings

import numpy as np
import pytest

from lamespec.errors import SeriesDivergenceError
from lamespec.services import elliptic as ell
from lamespec.services import monodromy as mono
from lamespec.services.perturbation import evaluate, expand
from lamespec.services.reference import (
    ANTIPERIODIC_CANDIDATES,
    COINCIDENCES,
    CYCLE_PERMUTATIONS,
    PERIODIC_CANDIDATES,
)
from lamespec.services.trig_basis import ModelParams


PI = math.pi
SAMPLE_E = [3.5 * PI ** 2, 10 * PI ** 2 + 5j, -PI ** 2 + 2j, 6 * PI ** 2 - 3j]


# ── helpers ──────────────────────────────────────────────────

def _ctx(q=0.2):
    return ell.make_context(q)


def _series_E(m, q, k_max=20):
    return evaluate(expand(m, k_max, ModelParams(1))[0], q)


def _candidate(q, t0=0.3 + 0.1j, m=2, E=1.0):
    p = mono.SpectralPoint(q, E, t0, m)
    return mono.BranchCandidate(p, (1e-12, 1e-12))


# ── tests ────────────────────────────────────────────────────

class TestSolveT0:
    def test_half_period(self):
        ctx = _ctx()
        e1 = complex(ell.constants(ctx).e1)
        t0 = mono.solve_t0(0.2, -e1, seed=0.49, ctx=ctx)
        assert mono.lattice_distance(t0, 0.5, ctx) < 1e-5

    @pytest.mark.parametrize("E", SAMPLE_E)
    def test_residual(self, E):
        ctx = _ctx()
        t0 = mono.solve_t0(0.2, E, ctx=ctx)
        assert abs(complex(ell.wp(t0, ctx)) + E) <= 1e-9 * (1 + abs(E))

    @pytest.mark.parametrize("E", SAMPLE_E)
    def test_canonical_cell(self, E):
        ctx = _ctx()
        t0 = mono.solve_t0(0.2, E, ctx=ctx)
        assert -1e-12 <= t0.real <= 0.5 + 1e-12
        assert abs(t0.imag) <= ctx.im_tau / 2 + 1e-12

    def test_canonical_t0_identifies_lattice_images(self):
        ctx = _ctx(0.3j)
        t = 0.21 + 0.07j
        for img in (-t, t + 1, t - ctx.tau, -t + 2 + 3 * ctx.tau):
            assert abs(mono.canonical_t0(img, ctx) - t) < 1e-12

    def test_matches_quadrature_inversion(self):
        ctx = _ctx()
        E = 3.5 * PI ** 2
        t0 = mono.solve_t0(0.2, E, ctx=ctx)
        assert mono.lattice_distance(mono.t0_by_quadrature(E, ctx), t0, ctx) < 1e-6


class TestExponent:
    T = 0.23 + 0.07j

    def test_odd(self):
        ctx = _ctx()
        assert abs(mono.exponent(-self.T, ctx) + mono.exponent(self.T, ctx)) < 1e-10

    def test_real_period(self):
        ctx = _ctx()
        assert abs(mono.exponent(self.T + 1, ctx) - mono.exponent(self.T, ctx)) < 1e-10

    @pytest.mark.parametrize("q", [0.2, 0.3j, 0.25 + 0.25j])
    def test_tau_period(self, q):
        ctx = _ctx(q)
        shift = mono.exponent(self.T + ctx.tau, ctx) - mono.exponent(self.T, ctx)
        assert abs(shift - 2j * PI) < 1e-10

    def test_half_periods(self):
        ctx = _ctx(0.25 + 0.25j)
        w1, w2, w3 = ell.half_periods(ctx)
        assert abs(mono.exponent(w1, ctx)) < 1e-10
        assert abs(mono.exponent(w3, ctx) - 1j * PI) < 1e-10
        assert mono.sheet_index(w2, ctx)[0] % 2 == 1

    def test_agree_modulo_sign_and_period(self):
        a = 0.3 + 1.2j
        assert mono.exponents_agree(a, a + 4j * PI, 1e-12)
        assert mono.exponents_agree(a, -a - 2j * PI, 1e-12)
        assert not mono.exponents_agree(a, a + 1j * PI, 1e-6)

    def test_sheet_index_of_series_eigenvalue(self):
        ctx = _ctx(0.1)
        t0 = mono.solve_t0(0.1, _series_E(0, 0.1), ctx=ctx)
        m, frac = mono.sheet_index(t0, ctx)
        assert frac < 1e-8
        assert m % 2 == 0 and abs(m) == 2


class TestCrossChecks:
    def test_hyperelliptic_empty_integral(self):
        ctx = _ctx()
        e1 = complex(ell.constants(ctx).e1)
        assert mono.hyperelliptic_exponent(-e1, ctx) == 0

    @pytest.mark.parametrize("E", SAMPLE_E)
    def test_hyperelliptic_matches_exponent(self, E):
        ctx = _ctx()
        direct = mono.exponent(mono.solve_t0(0.2, E, ctx=ctx), ctx)
        assert mono.exponents_agree(mono.hyperelliptic_exponent(E, ctx), direct, 1e-6)

    def test_exponent_real_below_spectrum(self):
        ctx = _ctx(0.3)
        e1 = complex(ell.constants(ctx).e1).real
        t0 = mono.solve_t0(0.3, -e1 - PI ** 2, ctx=ctx)
        f = mono.exponent(t0, ctx)
        assert abs(f.imag) < 1e-8
        assert abs(f.real) > 1e-3
        trace, _ = mono.ode_multiplier(0.3, -e1 - PI ** 2, ctx=ctx)
        assert trace.real > 2

    def test_ode_trace_on_periodic_eigenvalue(self):
        trace, mu = mono.ode_multiplier(0.15, _series_E(0, 0.15))
        assert abs(trace - 2) < 1e-8
        assert abs(mu - 1) < 1e-3

    def test_ode_trace_on_antiperiodic_eigenvalue(self):
        trace, _ = mono.ode_multiplier(0.15, _series_E(1, 0.15))
        assert abs(trace + 2) < 1e-8

    @pytest.mark.parametrize("E", [5 * PI ** 2 + 3j, 12 * PI ** 2 - 4j, 2.2 * PI ** 2])
    def test_ode_trace_matches_cosh(self, E):
        ctx = _ctx(0.15)
        f = mono.exponent(mono.solve_t0(0.15, E, ctx=ctx), ctx)
        trace, mu = mono.ode_multiplier(0.15, E, ctx=ctx)
        want = 2 * cmath.cosh(f)
        assert abs(trace - want) <= 1e-8 * (1 + abs(want))
        assert abs(mu) >= 1 - 1e-12
        assert abs(mu + 1 / mu - trace) <= 1e-10 * (1 + abs(trace))

    @pytest.mark.slow
    def test_random_points_agree(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            q = rng.uniform(0.05, 0.3) * cmath.exp(1j * rng.uniform(0, 2 * PI))
            E = PI ** 2 * complex(rng.uniform(-2, 12), rng.uniform(-4, 4))
            ctx = _ctx(q)
            f = mono.exponent(mono.solve_t0(q, E, ctx=ctx), ctx)
            trace, _ = mono.ode_multiplier(q, E, ctx=ctx)
            want = 2 * cmath.cosh(f)
            assert abs(trace - want) <= 1e-6 * (1 + abs(want)), (q, E)
            assert mono.exponents_agree(mono.hyperelliptic_exponent(E, ctx), f, 1e-6), (q, E)

    def test_ode_needs_nonzero_nome(self):
        with pytest.raises(SeriesDivergenceError):
            mono.ode_multiplier(0, PI ** 2)


class TestClassification:
    @pytest.mark.parametrize("q,i", COINCIDENCES)
    def test_coincidences(self, q, i):
        cand = mono.candidate_near(q)
        assert cand is not None
        assert cand.classification.value == f"e{i}"
        assert abs(cand.point.q - q) < 1e-5
        ctx = _ctx(cand.point.q)
        c = ell.constants(ctx)
        assert abs(2 * complex(c.eta1) + complex(c.e[i - 1])) <= 1e-5 * PI ** 2

    @pytest.mark.parametrize("a", list(CYCLE_PERMUTATIONS))
    def test_cycle_anchors_are_branch_points(self, a):
        cand = mono.candidate_near(a)
        assert cand is not None
        assert cand.classification == mono.Classification.BRANCH
        assert abs(cand.point.q - a) < 1e-5
        assert cand.residuals[0] <= 1e-8 * (1 + abs(cand.point.E))
        assert cand.residuals[1] <= 1e-8
        assert cand.coincidence_gap > 1e-5

    def test_neighbouring_coincidence_is_not_taken(self):
        # the e2 coincidence at 0.655163+0.503275i is one Newton run away
        a = 0.686317 + 0.559106j
        cand = mono.candidate_near(a)
        assert cand is not None
        assert abs(cand.point.q - a) < 1e-4
        assert cand.point.m % 2 == 0
        assert cand.classification == mono.Classification.BRANCH

    def test_polish_radius_bounds_the_move(self):
        target = 0.655163 + 0.503275j
        q = target + 0.01
        ctx = _ctx(q)
        t0 = mono.solve_t0(q, 2 * complex(ell.eta1(ctx)), ctx=ctx)
        m, _ = mono.sheet_index(t0, ctx)
        assert mono.polish_candidate(q, t0, m, radius=1e-3, half_period=1) is None
        cand = mono.polish_candidate(q, t0, m, radius=0.03, half_period=1)
        assert cand is not None
        assert abs(cand.point.q - target) < 1e-5
        assert mono.classify(cand).classification == mono.Classification.E2

    def test_outer_anchor_polish_stays_finite(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", RuntimeWarning)
            cand = mono.candidate_near(0.314813 + 0.821858j)
        assert cand is not None
        assert abs(cand.point.q - (0.314813 + 0.821858j)) < 1e-4
        assert all(math.isfinite(r) for r in cand.residuals)

    def test_classify_marks_gap(self):
        polished = mono.candidate_near(COINCIDENCES[0][0])
        again = mono.classify(_candidate(polished.point.q))
        assert again.classification == mono.Classification.E1
        assert again.coincidence_gap <= 1e-6
        assert mono.classify(_candidate(0.2)).classification == mono.Classification.BRANCH

    def test_candidate_dict(self):
        d = _candidate(0.1 + 0.2j, m=-3).to_dict()
        assert d["q"] == [0.1, 0.2]
        assert d["m"] == -3
        assert d["class"] == "unresolved"

    def test_family(self):
        assert _candidate(0.2, m=-2).point.family == "periodic"
        assert _candidate(0.2, m=3).point.family == "anti-periodic"


class TestScan:
    def test_region_membership(self):
        region = mono.ScanRegion((0.0, 0.9), (0.0, 0.9), 0.9)
        assert region.contains(0.328106j)
        assert not region.contains(0.7 + 0.7j)
        assert not region.contains(-0.1 + 0.2j)

    def test_rejects_region_near_unit_circle(self):
        with pytest.raises(ValueError):
            mono.branch_scan(mono.ScanRegion((0, 0.9), (0, 0.9), 0.97), grid=(3, 3))

    def test_small_region_is_empty(self):
        region = mono.ScanRegion((0.0, 0.2), (0.0, 0.2), 0.2)
        assert mono.branch_scan(region, grid=(8, 8)) == []

    def test_scan_is_deterministic(self):
        region = mono.ScanRegion((0.2, 0.35), (0.25, 0.4), 0.6)
        a = [c.to_dict() for c in mono.branch_scan(region, grid=(6, 6))]
        b = [c.to_dict() for c in mono.branch_scan(region, grid=(6, 6))]
        assert a == b

    def test_scan_finds_nearby_candidate(self):
        # 3x3 box centred on the purely imaginary coincidence
        region = mono.ScanRegion((0.0, 0.02), (0.318106, 0.338106), 0.5)
        found = mono.branch_scan(region, grid=(3, 3))
        assert any(abs(c.point.q - 0.328106j) < 1e-4 for c in found)
        hit = next(c for c in found if abs(c.point.q - 0.328106j) < 1e-4)
        assert hit.classification == mono.Classification.E1
        assert hit.point.family == "periodic"

    def test_predicted_seeds(self):
        p = mono.GridPoint(0.5 + 0.5j, 0.3 + 0.01j, 2.3 + 0j, 10 + 0j,
                           [1 + 0j, 5 + 0j, 0.1 + 0j], [100 + 0j, 1 + 0j, 1 + 0j])
        seeds = mono._predicted_seeds(p, (-6, 6), 0.05, 1e-3)
        general = [s for s in seeds if s[3] is None]
        half = [s for s in seeds if s[3] is not None]
        assert [s[2] for s in general] == [2]
        assert general[0][0] == pytest.approx(0.47 + 0.5j)
        assert [s[3] for s in half] == [0]
        assert half[0][0] == pytest.approx(0.49 + 0.5j)

    def test_predicted_seed_near_zero_is_dropped(self):
        p = mono.GridPoint(0.01 + 0j, 0.3 + 0.01j, 0.5 + 0j, 0j,
                           [1 + 0j, 1 + 0j, 1 + 0j], [100 + 0j, 1 + 0j, 1 + 0j])
        assert mono._predicted_seeds(p, (-6, 6), 0.05, 1e-3) == []

    @pytest.mark.parametrize("box,q,cls", [
        (((0.2, 0.25), (0.82, 0.87)), 0.224582 + 0.842777j, "branch"),
        (((0.78, 0.83), (0.38, 0.43)), 0.807197 + 0.405705j, "e2"),
    ])
    def test_coarse_grid_finds_outer_points(self, box, q, cls):
        # 3x3 grid with one interior node; spacing 0.025
        found = mono.branch_scan(mono.ScanRegion(box[0], box[1], 0.92), grid=(3, 3))
        hit = [c for c in found if abs(c.point.q - q) < 1e-4]
        assert len(hit) == 1
        assert hit[0].classification.value == cls

    @pytest.mark.slow
    def test_full_quadrant(self):
        found = mono.branch_scan(mono.ScanRegion(), grid=(40, 40))
        qs = [c.point.q for c in found]
        for q in PERIODIC_CANDIDATES + ANTIPERIODIC_CANDIDATES:
            assert any(abs(f - q) <= 1e-4 for f in qs), q
        periodic = [c for c in found if c.point.family == "periodic"]
        assert len(periodic) >= len(PERIODIC_CANDIDATES)
