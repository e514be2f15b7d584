"""Diversity-slope estimation from BER curves and closed-form approximations."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class DiversityReport:
    gd_empirical: float
    snr_pair: tuple
    gd_approx: float
    config_label: str = ""


def empirical_gd_values(ber1: float, ber2: float, snr1_db: float,
                        snr2_db: float) -> float:
    """Negative log-log slope between two (SNR, BER) samples."""
    if ber1 <= 0.0 or ber2 <= 0.0:
        raise DomainError("both BER values must be positive; gather more "
                          "errors before estimating a slope")
    if snr1_db == snr2_db:
        raise DomainError("SNR points must differ")
    dlog_ber = math.log10(ber2) - math.log10(ber1)
    dlog_snr = (snr2_db - snr1_db) / 10.0
    return -dlog_ber / dlog_snr


def empirical_gd(curve, snr1_db: float, snr2_db: float,
                 use_analytic: bool = False) -> float:
    """Slope of a BerCurve between two of its SNR points.

    use_analytic selects the attached closed-form values instead of the
    Monte Carlo estimates (useful near the asymptote where simulation
    would need prohibitively many errors).
    """
    try:
        p1 = curve.point_at(snr1_db)
        p2 = curve.point_at(snr2_db)
    except KeyError as e:
        raise ConfigError(str(e)) from e
    if use_analytic:
        b1, b2 = p1.analytic_ber, p2.analytic_ber
    else:
        b1, b2 = p1.ber, p2.ber
    return empirical_gd_values(b1, b2, snr1_db, snr2_db)


def siso_gd_approx(P: int, shapes) -> float:
    """Closed-form single-user diversity approximation P * min(m)."""
    shapes = tuple(shapes)
    if len(shapes) != P or P < 1:
        raise ConfigError(f"expected {P} shapes, got {len(shapes)}")
    return float(P * min(shapes))


def simo_gd_approx(K_u: int, P: int, shapes) -> float:
    """Closed-form multi-branch diversity approximation.

        K_u * [min(m) + (log2(1 + P) / P) * sum(m_p - min(m))]
    """
    shapes = tuple(shapes)
    if len(shapes) != P or P < 1 or K_u < 1:
        raise ConfigError(f"need K_u, P >= 1 and {P} shapes, got K_u={K_u}, "
                          f"{len(shapes)} shapes")
    m_min = min(shapes)
    corr = math.log2(1 + P) / P * sum(m - m_min for m in shapes)
    return float(K_u * (m_min + corr))
