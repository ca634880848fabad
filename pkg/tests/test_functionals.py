import math

import numpy as np
import pytest

from landausim.densities import (GaussianModel, ScaledModel, ShiftedModel,
                                 TensorPower)
from landausim.errors import CapabilityError
from landausim.functionals import (MCSpec, J_functional,
                                   beta_power_identity_probes, dissipation_K,
                                   entropy, entropy_production_D,
                                   fisher_information, gaussian_entropy,
                                   gaussian_fisher, ibp_identity_check,
                                   k_family, tensor_consistency_D)
from landausim.potentials import PotentialSpec
from landausim.reference import maxwellian

from _oracles import ANISO_GM2, ANISO_GM3


def _agree(est, truth, tol):
    """MC estimate matches a frozen reference within max(4 SE, tol)."""
    return abs(est.value - truth) <= max(4.0 * est.abs_error, tol)


# ---------------------------------------------------------------------------
# Entropy and Fisher information (quadrature vs closed forms)

@pytest.mark.parametrize("sigma2", [0.25, 1.0, 4.0])
def test_entropy_fisher_closed_forms(sigma2):
    m = maxwellian(sigma2)
    h = entropy(m)
    assert h.method == "grid"
    assert h.value == pytest.approx(gaussian_entropy(sigma2), rel=1e-6)
    assert abs(h.value - gaussian_entropy(sigma2)) <= max(h.abs_error, 1e-6)
    i = fisher_information(m)
    assert i.value == pytest.approx(gaussian_fisher(sigma2), rel=1e-6)


def test_entropy_zero_crossing_temperature():
    # H vanishes exactly at sigma2 = 1/(2 pi e)
    sigma2 = 1.0 / (2.0 * math.pi * math.e)
    assert gaussian_entropy(sigma2) == pytest.approx(0.0, abs=1e-15)
    assert abs(entropy(maxwellian(sigma2)).value) < 1e-6


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_entropy_fisher_scaling_laws(lam):
    base = maxwellian(1.0)
    scaled = ScaledModel(base, lam)
    h0, h1 = entropy(base).value, entropy(scaled).value
    assert h1 - h0 == pytest.approx(3.0 * math.log(lam), abs=1e-6)
    i0, i1 = fisher_information(base).value, fisher_information(scaled).value
    assert i1 == pytest.approx(lam ** 2 * i0, rel=1e-6)


def test_entropy_fisher_tensor_delegation(aniso):
    pair = TensorPower(aniso, 2)
    assert entropy(pair).value == entropy(aniso).value
    assert fisher_information(pair).value == fisher_information(aniso).value


def test_grid_functionals_reject_high_dim():
    six_dim = GaussianModel(np.zeros(6), 1.0)  # not a TensorPower
    with pytest.raises(CapabilityError):
        entropy(six_dim)


# ---------------------------------------------------------------------------
# Maxwellian null structure

@pytest.mark.parametrize("sigma2", [0.5, 1.0, 2.0])
def test_maxwellian_annihilates_pair_functionals(sigma2):
    # dyadic temperatures make the pair fields vanish identically in floating
    # point, so the estimates and their standard errors are exactly zero
    pair = TensorPower(maxwellian(sigma2), 2)
    mc = MCSpec(50_000, 7)
    for est in (entropy_production_D(pair, -2.0, mc),
                J_functional(pair, -2.0, mc),
                dissipation_K(pair, 1.0, -2.0, mc)):
        assert est.value == 0.0
        assert est.abs_error == 0.0


def test_maxwellian_nondyadic_temperature_is_roundoff_null():
    # at other temperatures the null survives only up to rounding; the
    # residual scale is ~1e-32, negligible against any physical value
    pair = TensorPower(maxwellian(0.7), 2)
    est = dissipation_K(pair, 1.0, -2.0, MCSpec(20_000, 7))
    assert 0.0 <= est.value < 1e-28


# ---------------------------------------------------------------------------
# Frozen references for an anisotropic Gaussian (independent quadrature)

def test_D_matches_reference_gm2(aniso_pair, pot_gm2):
    est = entropy_production_D(aniso_pair, pot_gm2, MCSpec(400_000, 12))
    assert _agree(est, ANISO_GM2["D"], ANISO_GM2["D_tol"] + 4 * est.abs_error)
    assert est.method == "mc" and est.n + est.n_rejected == 400_000


def test_J_matches_reference_gm2(aniso_pair, pot_gm2):
    est = J_functional(aniso_pair, pot_gm2, MCSpec(400_000, 12))
    assert _agree(est, ANISO_GM2["J"], ANISO_GM2["J_tol"] + 4 * est.abs_error)


@pytest.mark.parametrize("beta", [0.0, 1.0 / 3.0, 0.5, 1.0])
def test_K_matches_reference_gm2(aniso_pair, pot_gm2, beta):
    est = dissipation_K(aniso_pair, beta, pot_gm2, MCSpec(400_000, 12))
    assert _agree(est, ANISO_GM2["K"][beta], ANISO_GM2["K_tol"])


def test_DJK_match_reference_gm3(aniso_pair, pot_gm3):
    mc = MCSpec(400_000, 13)
    d = entropy_production_D(aniso_pair, pot_gm3, mc)
    j = J_functional(aniso_pair, pot_gm3, mc)
    k0 = dissipation_K(aniso_pair, 0.0, pot_gm3, mc)
    assert _agree(d, ANISO_GM3["D"], ANISO_GM3["D_tol"] + 4 * d.abs_error)
    assert _agree(j, ANISO_GM3["J"], ANISO_GM3["J_tol"] + 4 * j.abs_error)
    assert _agree(k0, ANISO_GM3["K"][0.0], ANISO_GM3["K_tol"])


def test_D_estimates_reproducible_across_seeds(aniso_pair, pot_gm2):
    a = entropy_production_D(aniso_pair, pot_gm2, MCSpec(200_000, 1))
    b = entropy_production_D(aniso_pair, pot_gm2, MCSpec(200_000, 2))
    joint = math.hypot(a.abs_error, b.abs_error)
    assert abs(a.value - b.value) <= 4.0 * joint
    # same seed, same estimate, bit for bit
    c = entropy_production_D(aniso_pair, pot_gm2, MCSpec(200_000, 1))
    assert c.value == a.value


def test_D_accepts_single_particle_density(aniso, aniso_pair, pot_gm2):
    # a 3D model is promoted to its pair tensor; the two calls share nothing
    # but the seed, which fully determines the sample, so values coincide
    a = entropy_production_D(aniso, pot_gm2, MCSpec(50_000, 4))
    b = entropy_production_D(aniso_pair, pot_gm2, MCSpec(50_000, 4))
    assert a.value == b.value


# ---------------------------------------------------------------------------
# The K_beta family: quadratic-in-beta structure and the sandwich bounds

def test_k_family_quadratic_identity(aniso_pair, pot_gm2):
    fam = k_family(aniso_pair, [0.0, 0.5, 1.0], pot_gm2, MCSpec(200_000, 21))
    for beta in (0.0, 0.5, 1.0):
        res = fam.residual(beta)
        assert abs(res.value) <= max(4.0 * res.abs_error, 1e-12)
    # anchoring at beta = 1 instead of 1/3 must not change the conclusion:
    # K_beta - K_1 - [(beta-1/3)^2 - (2/3)^2] J estimates zero as well
    arr = (fam._samples[0.0] - fam._samples[1.0]
           - ((0.0 - 1 / 3) ** 2 - (1.0 - 1 / 3) ** 2) * fam._samples["J"])
    se = float(np.std(arr, ddof=1) / math.sqrt(fam.n))
    assert abs(float(np.mean(arr))) <= max(4.0 * se, 1e-12)


def test_k_family_sandwich_bounds(aniso_pair, pot_gm2):
    betas = [0.0, 0.25, 0.5, 0.75, 1.0]
    fam = k_family(aniso_pair, betas, pot_gm2, MCSpec(200_000, 22))
    k1 = fam.estimates[1.0]
    for beta in betas:
        kb = fam.estimates[beta]
        lower = 2.25 * (beta - 1.0 / 3.0) ** 2 * k1.value
        slack = 4.0 * (kb.abs_error + k1.abs_error)
        assert kb.value >= lower - slack
        assert kb.value <= k1.value + slack


def test_k_family_always_contains_the_anchor(aniso_pair, pot_gm2):
    fam = k_family(aniso_pair, [0.0], pot_gm2, MCSpec(10_000, 3))
    assert 1.0 / 3.0 in fam.estimates
    d = fam.difference(0.0, 1.0 / 3.0)
    assert d.value == pytest.approx(
        fam.estimates[0.0].value - fam.estimates[1 / 3].value, rel=1e-12)


def test_dissipation_K_rejects_beta_out_of_range(aniso_pair, pot_gm2):
    for beta in (-0.1, 1.5):
        with pytest.raises(ValueError):
            dissipation_K(aniso_pair, beta, pot_gm2, MCSpec(100, 0))


# ---------------------------------------------------------------------------
# Integration by parts: int (ddF)(dF)^2/F^2 = (2/3) J

def test_ibp_identity_normalized_scalar(aniso_pair, pot_gm2):
    full = ibp_identity_check(aniso_pair, pot_gm2, MCSpec(200_000, 31),
                              full=True)
    assert abs(full["residual_mean"]) <= 4.0 * full["residual_se"]
    scalar = ibp_identity_check(aniso_pair, pot_gm2, MCSpec(200_000, 31))
    assert scalar == pytest.approx(
        abs(full["residual_mean"]) / (1.5 * full["rhs"]), rel=1e-12)
    assert full["lhs"] == pytest.approx(full["rhs"],
                                        abs=6.0 * full["residual_se"])


def test_ibp_residual_se_shrinks_like_sqrt_n(aniso_pair, pot_gm2):
    small = ibp_identity_check(aniso_pair, pot_gm2, MCSpec(20_000, 5),
                               full=True)
    big = ibp_identity_check(aniso_pair, pot_gm2, MCSpec(320_000, 5),
                             full=True)
    shrink = small["residual_se"] / big["residual_se"]
    assert shrink == pytest.approx(4.0, rel=0.15)  # sqrt(16) with CLT noise


def test_ibp_residual_averages_down_across_seeds(aniso_pair, pot_gm2):
    # seed-averaged residual means behave like independent zero-mean draws:
    # their spread matches the reported SE scale
    vals, ses = [], []
    for seed in range(16):
        full = ibp_identity_check(aniso_pair, pot_gm2, MCSpec(20_000, seed),
                                  full=True)
        vals.append(full["residual_mean"])
        ses.append(full["residual_se"])
    vals = np.array(vals)
    pooled_mean = vals.mean()
    pooled_se = float(np.mean(ses)) / math.sqrt(16)
    assert abs(pooled_mean) <= 4.0 * pooled_se


# ---------------------------------------------------------------------------
# Structural identities evaluated pointwise / on shared samples

def test_beta_power_identity_probes(aniso_pair, pot_gm2, rng):
    X = aniso_pair.sample(rng, 10_000)
    for beta in (0.0, 1.0 / 3.0, 0.5, 1.0):
        assert beta_power_identity_probes(aniso_pair, pot_gm2, beta, X) <= 1e-12


def test_eta_monotonicity_on_shared_samples(aniso_pair, rng):
    # shrinking eta raises alpha pointwise, hence every per-sample D value
    X = aniso_pair.sample(rng, 20_000)
    mc = MCSpec(0, 0)
    vals = [entropy_production_D(aniso_pair, PotentialSpec(-2.0, eta), mc,
                                 _X=X).value
            for eta in (0.4, 0.2, 0.1, 0.05)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # and the bare kernel dominates every regularized value
    bare = entropy_production_D(aniso_pair, -2.0, mc, _X=X).value
    assert bare >= vals[-1]


def test_J_translation_invariance(aniso, pot_gm2):
    # J only sees velocity differences and log-density gradients, both
    # translation covariant; with a shared seed the shifted sample is the
    # base sample plus the shift, so the estimates match to rounding
    base_pair = TensorPower(aniso, 2)
    moved_pair = TensorPower(ShiftedModel(aniso, [1.0, -2.0, 0.5]), 2)
    mc = MCSpec(100_000, 17)
    a = J_functional(base_pair, pot_gm2, mc)
    b = J_functional(moved_pair, pot_gm2, mc)
    assert b.value == pytest.approx(a.value, rel=1e-9)


@pytest.mark.parametrize("j", [2, 3])
def test_tensor_consistency_is_exact(aniso, pot_gm2, j):
    est_j, est_pair = tensor_consistency_D(aniso, j, pot_gm2, MCSpec(30_000, 9))
    assert est_j.value == est_pair.value
    assert est_j.abs_error == est_pair.abs_error
    assert est_j.n == est_pair.n


def test_tensor_consistency_rejects_j_one(aniso, pot_gm2):
    with pytest.raises(ValueError):
        tensor_consistency_D(aniso, 1, pot_gm2, MCSpec(100, 0))


def test_pair_functionals_reject_3d_model(aniso, pot_gm2):
    with pytest.raises(CapabilityError):
        J_functional(aniso, pot_gm2, MCSpec(100, 0))
