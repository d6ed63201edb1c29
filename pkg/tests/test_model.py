from __future__ import annotations

import math

import pytest

from ptwell.model import (COMPLEX_PAIR, REAL, DomainError, SpectralRoot, WaveCoeffs, WellConfig,
                          make_config)


def test_zero_coupling_config_is_valid():
    cfg = make_config(0.5, 0.0)
    assert cfg.a == 0.5 and cfg.xi == 0.0 and cfg.mu == 0.0


def test_critical_strength_config_is_valid():
    cfg = make_config("0.5", "5.059764944")
    assert cfg.xi == pytest.approx(5.059764944)
    assert cfg.mu == pytest.approx(2.529882472)


@pytest.mark.parametrize("a, xi", [(1.2, 1.0), (0.0, 1.0), (1.0, 1.0), (0.5, -0.1),
                                   (math.nan, 1.0), (0.5, math.inf)])
def test_rejects_bad_parameters(a, xi):
    with pytest.raises(DomainError):
        make_config(a, xi)


def test_rejects_non_numeric():
    with pytest.raises(DomainError):
        make_config("half", 1)


def test_configs_are_hashable_values():
    assert WellConfig(0.5, 1) == WellConfig(0.5, 1.0)
    assert len({WellConfig(0.5, 1), WellConfig(0.5, 1.0)}) == 1


def test_real_root_must_be_positive_real():
    with pytest.raises(ValueError):
        SpectralRoot(1, 1 + 1e-3j, REAL)
    with pytest.raises(ValueError):
        SpectralRoot(1, -1.0, REAL)


def test_conjugate_root_and_energy():
    r = SpectralRoot(2, 3.9 - 0.5j, COMPLEX_PAIR)
    c = r.conjugate(3)
    assert c.kappa == 3.9 + 0.5j and c.n == 3
    assert c.energy == pytest.approx(r.energy.conjugate())
    assert not r.is_real


def test_wavecoeffs_scaling_keeps_route():
    w = WaveCoeffs(1.0, 2.0, 3.0, 4.0, "alpha=1", "stin").scaled(0.5, "free")
    assert w.as_tuple() == (0.5, 1.0, 1.5, 2.0)
    assert w.route == "stin" and w.norm_convention == "free"
