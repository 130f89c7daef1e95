import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from bb84pns import (
    ChannelParams,
    DegenerateLinkError,
    DetectorParams,
    SourceModel,
    binary_entropy,
    link_rates,
    p_arrive,
    p_empty,
    transmission,
)


def test_entropy_endpoints_and_half():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)


def test_entropy_rejects_out_of_range():
    with pytest.raises(ValueError):
        binary_entropy(-0.1)
    with pytest.raises(ValueError):
        binary_entropy([0.2, 1.5])
    with pytest.raises(ValueError):
        binary_entropy(float("nan"))


def test_entropy_vectorized():
    h = binary_entropy(np.array([0.0, 0.11, 0.5]))
    assert h.shape == (3,)
    assert h[1] == pytest.approx(0.49991596, abs=1e-8)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_entropy_symmetry(x):
    assert abs(binary_entropy(x) - binary_entropy(1.0 - x)) <= 1e-12


def test_poissonian_matches_scipy():
    s = SourceModel.poissonian(0.3)
    np.testing.assert_allclose(s.p, poisson.pmf(np.arange(21), 0.3), rtol=1e-12)
    assert s.g2 == 1.0
    assert s.mu == 0.3


def test_poissonian_tail_guard():
    with pytest.raises(ValueError, match="tail"):
        SourceModel.poissonian(5.0)
    s = SourceModel.poissonian(5.0, n_max=60)
    assert s.n_max == 60


def test_poissonian_rejects_bad_args():
    with pytest.raises(ValueError):
        SourceModel.poissonian(-0.1)
    with pytest.raises(ValueError):
        SourceModel.poissonian(0.1, n_max=2)


def test_custom_source_from_dict():
    s = SourceModel.custom({1: 0.5, 0: 0.5})
    assert s.probs == (0.5, 0.5)
    assert s.prob(7) == 0.0
    assert s.mu == 0.5


def test_custom_source_g2():
    mu, g2 = 0.1, 0.4
    s = SourceModel.custom({0: 1 - mu - g2 * mu**2 / 2, 1: mu, 2: g2 * mu**2 / 2})
    assert s.g2 == pytest.approx(g2, rel=1e-12)


def test_custom_source_normalization_checked():
    with pytest.raises(ValueError, match="sum"):
        SourceModel.custom([0.5, 0.4])
    with pytest.raises(ValueError):
        SourceModel.custom([1.1, -0.1])


def test_transmission():
    assert transmission(0.25, 40) == pytest.approx(0.1, rel=1e-15)
    assert ChannelParams(0.25, 0.0, 1.0).t == 1.0


def test_p_empty_general_matches_poisson_shortcut():
    pois = SourceModel.poissonian(0.4)
    same = SourceModel.custom(pois.probs)
    t, eta = 0.3, 0.1
    assert p_empty(same, t, eta) == pytest.approx(p_empty(pois, t, eta), rel=1e-12)
    assert p_arrive(same, t, eta) == pytest.approx(p_arrive(pois, t, eta), rel=1e-10)
    assert p_empty(pois, t, eta) == pytest.approx(math.exp(-0.4 * t * eta), rel=1e-15)


def test_p_arrive_weak_pulse_precision():
    s = SourceModel.poissonian(1e-6)
    # 1 - exp(-x) ~ x for tiny x; naive 1 - p_empty loses digits here
    x = 1e-6 * 1e-3 * 0.1
    assert p_arrive(s, 1e-3, 0.1) == pytest.approx(x - x * x / 2, rel=1e-12)


def test_link_rates_closed_form():
    mu, t, eta, p_d, V = 0.1, 0.1, 0.1, 1e-5, 0.9
    src = SourceModel.poissonian(mu)
    ch = ChannelParams(alpha=0.25, d=40.0, V=V)
    link = link_rates(src, ch, DetectorParams(eta, p_d))
    p0 = math.exp(-mu * t * eta)
    c_r = 0.5 * ((1 - p0) * (1 + V) / 2 + p0 * p_d)
    c_w = 0.5 * ((1 - p0) * (1 - V) / 2 + p0 * p_d)
    assert link.c_right == pytest.approx(c_r, rel=1e-12)
    assert link.c_wrong == pytest.approx(c_w, rel=1e-12)
    q = c_w / (c_r + c_w)
    assert link.q == pytest.approx(q, rel=1e-12)
    h = -q * math.log2(q) - (1 - q) * math.log2(1 - q)
    assert link.i_ab == pytest.approx((c_r + c_w) * (1 - h), rel=1e-12)


def test_perfect_link_has_no_errors():
    link = link_rates(SourceModel.poissonian(0.1), ChannelParams(0.25, 20, 1.0), DetectorParams(0.1, 0.0))
    assert link.c_wrong == 0.0
    assert link.q == 0.0


def test_dark_counts_only_give_half_qber():
    link = link_rates(SourceModel.custom([1.0]), ChannelParams(0.25, 20, 1.0), DetectorParams(0.1, 1e-5))
    assert link.q == 0.5
    assert link.i_ab == 0.0


def test_no_counts_is_degenerate():
    with pytest.raises(DegenerateLinkError):
        link_rates(SourceModel.custom([1.0]), ChannelParams(0.25, 20, 1.0), DetectorParams(0.1, 0.0))


def test_parameter_validation():
    with pytest.raises(ValueError):
        ChannelParams(0.25, -1.0, 1.0)
    with pytest.raises(ValueError):
        ChannelParams(0.25, 10.0, 1.1)
    with pytest.raises(ValueError):
        DetectorParams(eta=0.0)
    with pytest.raises(ValueError):
        DetectorParams(p_d=1.0)
