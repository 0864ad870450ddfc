import io
import math

import numpy as np
import pytest

from twofold.continuation import (BRANCH_COLUMNS, RESOLUTION_STOP, BranchLimits, canard_family,
                                  continue_branch, correct_cycle, cycle_through_point,
                                  explosion_response, explosion_width, floquet, hopf_start,
                                  locate_explosion, locate_fold, relaxation_cycle, shoot,
                                  write_branch_csv)
from twofold.errors import NoExplosion, NoFold, NoHopf, WrongClass
from twofold.pws import model_from_coefficients
from twofold.regularizer import RegularizationFn
from twofold.scaling_chart import equilibrium_k2, lyapunov_a2, melnikov

LIN, CUB, SEP = RegularizationFn.linear(), RegularizationFn.cubic(), RegularizationFn.septic()


@pytest.fixture(scope="module")
def ii2_branches():
    from conftest import ii2_model
    m = ii2_model()
    out = {}
    for fn in (LIN, CUB):
        hs = hopf_start(m, fn, 0.01, s0=-0.02)
        out[fn.kind] = continue_branch(hs.cycle, 1.0, BranchLimits(max_points=300, mu2_max=6))
    return m, out


@pytest.mark.parametrize("case", [("ii2", LIN, 0.01), ("ii2", CUB, 0.01),
                                  ("vi3", CUB, 0.1), ("vi3", SEP, 0.1)],
                         ids=["ii2-linear", "ii2-cubic", "vi3-cubic", "vi3-septic"])
def test_hopf_side_and_stability_follow_a2(case, ii2, vi3):
    name, fn, r2 = case
    m = ii2 if name == "ii2" else vi3
    hs = hopf_start(m, fn, r2, s0=-0.02 * (1 if name == "ii2" else 10 * r2))
    assert hs.side == hs.predicted_side
    lam = floquet(hs.cycle)
    assert (lam < 1.0) == (lyapunov_a2(m, fn) < 0)


def test_hopf_start_needs_hopf():
    with pytest.raises(NoHopf):
        hopf_start(model_from_coefficients(-1, 1, 2), CUB, 0.01)


def test_floquet_variational_matches_finite_differences(ii2):
    cyc = hopf_start(ii2, CUB, 0.01, s0=-0.1).cycle
    assert floquet(cyc) == pytest.approx(floquet(cyc, "fd"), abs=1e-7)
    with pytest.raises(ValueError):
        floquet(cyc, "other")


def test_shooting_residual_at_corrected_cycle(vi3):
    cyc = correct_cycle(vi3, CUB, 0.1, -0.01, -0.0083)
    sh = shoot(vi3, CUB, 0.1, cyc.s, cyc.mu2)
    assert abs(sh.g) <= 1e-10


def test_hopf_square_root_law(ii2):
    hs = hopf_start(ii2, CUB, 0.01)
    d = [abs(correct_cycle(ii2, CUB, 0.01, -s, hs.mu2_hopf).mu2 - hs.mu2_hopf)
         for s in (0.01, 0.005)]
    assert d[0] / d[1] == pytest.approx(4.0, rel=0.05)


def test_ii2_linear_branch_has_saddle_node(ii2_branches):
    m, br = ii2_branches
    b = br["linear"]
    assert b.folds
    fold = locate_fold(b, m, LIN)[0]
    assert fold.floquet == pytest.approx(1.0, abs=1e-6)
    # subcritical: the branch leaves the Hopf point backwards and turns round
    assert fold.mu2 < b.points[0].mu2
    assert fold.mu2 <= min(p.mu2 for p in b.points) + 1e-9
    assert not b.points[1].stable and b.points[-1].stable


def test_ii2_cubic_branch_has_no_fold(ii2_branches):
    m, br = ii2_branches
    b = br["cubic"]
    assert not b.folds
    assert all(p.stable for p in b.points)
    assert np.all(np.diff(b.column("mu2")) > 0)
    with pytest.raises(NoFold):
        locate_fold(b, m, CUB)


def test_ii2_far_branch_attracting(ii2_branches):
    _, br = ii2_branches
    for b in br.values():
        assert b.points[-1].amp_yhat > 30 and b.points[-1].floquet < 1.0


def test_melnikov_matches_continuation(ii2):
    m = melnikov(ii2, CUB, 0.5)
    errs = [abs(cycle_through_point(ii2, CUB, r2, m.orbit.y_hat_0, r2 * m.mu2_of_h) / r2
                - m.mu2_of_h) for r2 in (0.01, 0.005, 0.0025)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(abs(q - 4.0) <= 1.2 for q in ratios)


def test_branch_csv(ii2_branches):
    _, br = ii2_branches
    buf = io.StringIO()
    write_branch_csv(br["cubic"], buf, ["hdr"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# hdr"
    assert lines[1] == ",".join(BRANCH_COLUMNS)
    assert len(lines) == 2 + len(br["cubic"].points)


def test_vi3_cubic_explosion_location(vi3):
    ex = locate_explosion(vi3, CUB, 0.1, (-0.0079, -0.0078))
    assert ex.mu2 == pytest.approx(-7.8365738e-3, abs=1e-5)
    assert ex.width < 1e-9
    assert ex.amp_hi - ex.amp_lo > 0.5 or ex.amp_lo - ex.amp_hi > 0.5


def test_explosion_needs_vi3_and_jump(ii2, vi3):
    with pytest.raises(WrongClass):
        locate_explosion(ii2, CUB, 0.01, (0.0, 0.1))
    with pytest.raises(NoExplosion):
        locate_explosion(vi3, CUB, 0.1, (-0.0079, -0.00789))


def test_explosion_response_jumps(vi3):
    small = explosion_response(vi3, CUB, 0.1, -0.0079)
    large = explosion_response(vi3, CUB, 0.1, -0.0078)
    assert small < 0.3 and large > 1.0


def test_canard_family_both_sides(vi3):
    hs = hopf_start(vi3, CUB, 0.1, s0=-0.02)
    fam = canard_family(hs.cycle, -0.0070)
    assert fam.small.termination == RESOLUTION_STOP
    assert fam.large.termination == RESOLUTION_STOP
    lo, hi = fam.explosion
    assert hi - lo < 1e-9
    assert lo == pytest.approx(-7.8365738e-3, abs=1e-5)
    assert fam.gap[0] < 0.3 and fam.gap[1] > 1.2
    assert fam.large.points[0].floquet < 1e-3


def test_vi3_septic_fold_before_explosion(vi3):
    hs = hopf_start(vi3, SEP, 0.1, s0=-0.02)
    fam = canard_family(hs.cycle, -0.0115)
    folds = locate_fold(fam.small, vi3, SEP)
    assert len(folds) == 1
    # the fold precedes the explosion in both mu2 and amplitude
    assert folds[0].mu2 < min(fam.explosion)
    assert folds[0].amp_x < fam.gap[0]


def test_relaxation_cycle_is_attracting(vi3):
    cyc = relaxation_cycle(vi3, CUB, 0.1, -0.0070)
    assert 0.0 <= floquet(cyc) < 1e-3
    assert cyc.s < 0
    xs, ys = equilibrium_k2(vi3, CUB, 0.1, -0.0070)
    assert cyc.shot.amp_x2 * 0.1 > 1.0 and math.isfinite(ys)


def test_explosion_width_shrinks_faster_than_power(vi3):
    widths = []
    for r2 in (0.2, 0.1, 0.05):
        hs = hopf_start(vi3, CUB, r2, s0=-0.2 * r2)
        widths.append(explosion_width(hs.cycle).width)
    slopes = [math.log(widths[i] / widths[i + 1]) / math.log(2) for i in range(2)]
    assert slopes[0] > 1.5 and slopes[1] > slopes[0]


def test_explosion_width_needs_canard(ii2):
    hs = hopf_start(ii2, CUB, 0.01, s0=-0.02)
    with pytest.raises(NoExplosion):
        explosion_width(hs.cycle, limits=BranchLimits(max_points=20))
