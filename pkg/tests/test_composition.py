import math

import pytest

from pnsgd_privacy.composition import (
    DEFAULT_ALPHA_GRID,
    GdpParam,
    RdpPoint,
    compose_epochs,
    dp_to_gdp,
    dp_to_rdp,
    gdp_compose,
    gdp_to_dp,
    rdp_alpha_sweep,
    rdp_compose,
    rdp_to_dp,
)
from pnsgd_privacy.errors import DomainError
from pnsgd_privacy.privacy_bounds import PrivacyBudget
from pnsgd_privacy.special_functions import theta


class TestRdp:
    def test_transfer_formula(self):
        point = dp_to_rdp(PrivacyBudget(epsilon=1.0, delta=1e-6), alpha=4.0)
        assert point.eps_rdp == pytest.approx(1.0 + math.log(1e-6) / 3.0, rel=1e-14)

    def test_negative_eps_rdp_allowed(self):
        point = dp_to_rdp(PrivacyBudget(epsilon=0.1, delta=1e-6), alpha=2.0)
        assert point.eps_rdp < 0

    def test_compose_additive(self):
        point = RdpPoint(alpha=8.0, eps_rdp=0.25)
        assert rdp_compose(point, 10).eps_rdp == pytest.approx(2.5)
        assert rdp_compose(point, 1).eps_rdp == point.eps_rdp

    def test_single_epoch_round_trip(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-5)
        point = dp_to_rdp(start, alpha=16.0)
        back = rdp_to_dp(rdp_compose(point, 1), delta_target=1e-5)
        assert back.epsilon == pytest.approx(start.epsilon, rel=1e-13)
        assert back.delta == start.delta

    def test_group_law(self):
        # composing 6 epochs must equal composing 2 then 3
        point = RdpPoint(alpha=4.0, eps_rdp=0.1)
        assert rdp_compose(point, 6).eps_rdp == pytest.approx(
            rdp_compose(rdp_compose(point, 2), 3).eps_rdp, rel=1e-14
        )

    def test_final_eps_monotone_in_epochs(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-6)
        eps = [
            compose_epochs(start, e, "rdp", alpha=32.0, delta_target=1e-5).budget.epsilon
            for e in [1, 2, 5, 10, 50]
        ]
        assert all(a < b for a, b in zip(eps, eps[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            RdpPoint(alpha=1.0, eps_rdp=0.5)
        with pytest.raises(DomainError):
            dp_to_rdp(PrivacyBudget(epsilon=1.0, delta=0.0), alpha=2.0)
        with pytest.raises(DomainError):
            rdp_to_dp(RdpPoint(alpha=2.0, eps_rdp=1.0), delta_target=0.0)
        with pytest.raises(DomainError):
            rdp_compose(RdpPoint(alpha=2.0, eps_rdp=1.0), 0)


class TestGdp:
    def test_inversion_round_trip(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-4)
        param = dp_to_gdp(start)
        assert theta(math.e, param.mu) == pytest.approx(1e-4, rel=1e-9)
        back = gdp_to_dp(gdp_compose(param, 1), epsilon=1.0)
        assert back.delta == pytest.approx(start.delta, rel=1e-9)

    def test_compose_sqrt_law(self):
        param = GdpParam(mu=0.5)
        assert gdp_compose(param, 4).mu == pytest.approx(1.0)
        assert gdp_compose(param, 9).mu == pytest.approx(1.5)

    def test_group_law(self):
        param = GdpParam(mu=0.3)
        assert gdp_compose(param, 12).mu == pytest.approx(
            gdp_compose(gdp_compose(param, 4), 3).mu, rel=1e-14
        )

    def test_mu_monotone_in_delta(self):
        mus = [dp_to_gdp(PrivacyBudget(epsilon=1.0, delta=d)).mu for d in [1e-8, 1e-6, 1e-4, 1e-2]]
        assert all(a < b for a, b in zip(mus, mus[1:]))

    def test_tiny_delta_bracket_expansion(self):
        param = dp_to_gdp(PrivacyBudget(epsilon=0.0, delta=1e-14))
        assert theta(1.0, param.mu) == pytest.approx(1e-14, rel=1e-6)

    def test_large_delta(self):
        param = dp_to_gdp(PrivacyBudget(epsilon=0.0, delta=0.99))
        assert param.mu > 5
        assert theta(1.0, param.mu) == pytest.approx(0.99, rel=1e-9)

    def test_delta_monotone_in_epochs(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-6)
        deltas = [
            compose_epochs(start, e, "gdp", epsilon_target=1.0).budget.delta
            for e in [1, 2, 5, 10]
        ]
        assert all(a < b for a, b in zip(deltas, deltas[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            GdpParam(mu=0.0)
        with pytest.raises(DomainError):
            dp_to_gdp(PrivacyBudget(epsilon=1.0, delta=0.0))
        with pytest.raises(DomainError):
            gdp_to_dp(GdpParam(mu=1.0), epsilon=-0.5)


class TestComposeEpochs:
    def test_rdp_diagnostics(self):
        res = compose_epochs(
            PrivacyBudget(epsilon=1.0, delta=1e-6), 5, "rdp", alpha=8.0, delta_target=1e-5
        )
        d = res.diagnostics
        assert d["method"] == "rdp"
        assert d["eps_rdp_composed"] == pytest.approx(5 * d["eps_rdp_per_epoch"], rel=1e-14)
        assert d["negative_eps_rdp"] is True
        # composed RDP curve is entirely negative here, so the final
        # epsilon clamps at the zero floor
        assert res.budget.epsilon == 0.0

    def test_gdp_diagnostics(self):
        res = compose_epochs(PrivacyBudget(epsilon=1.0, delta=1e-6), 4, "gdp", epsilon_target=1.0)
        d = res.diagnostics
        assert d["mu_composed"] == pytest.approx(2 * d["mu_per_epoch"], rel=1e-12)

    def test_missing_parameters(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-6)
        with pytest.raises(DomainError):
            compose_epochs(start, 2, "rdp", alpha=2.0)
        with pytest.raises(DomainError):
            compose_epochs(start, 2, "gdp")
        with pytest.raises(DomainError):
            compose_epochs(start, 2, "moments", alpha=2.0, delta_target=1e-5)


class TestAlphaSweep:
    def test_best_is_grid_minimum(self):
        start = PrivacyBudget(epsilon=1.0, delta=1e-6)
        best_alpha, best = rdp_alpha_sweep(start, 10, delta_target=1e-5)
        assert best_alpha in DEFAULT_ALPHA_GRID
        for a in DEFAULT_ALPHA_GRID:
            other = compose_epochs(start, 10, "rdp", alpha=a, delta_target=1e-5)
            assert best.budget.epsilon <= other.budget.epsilon + 1e-15

    def test_custom_grid(self):
        start = PrivacyBudget(epsilon=0.5, delta=1e-6)
        best_alpha, best = rdp_alpha_sweep(start, 3, delta_target=1e-5, alphas=(2.0, 3.0))
        assert best_alpha in (2.0, 3.0)
        assert best.diagnostics["alpha"] == best_alpha
