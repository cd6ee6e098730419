"""Bjontegaard delta metrics between two rate-quality curves.

The rate metric fits log10(bitrate) as a cubic function of quality for each
curve, integrates both fits over the shared quality interval and converts the
mean log difference to a percentage. When the cubic fit is ill-conditioned the
piecewise cubic Hermite interpolant is used instead and the result says so.
"""
import logging
import warnings
from typing import Tuple

import numpy as np
from numpy.exceptions import RankWarning
from scipy import integrate, interpolate

from ..errors import DegenerateFit, InsufficientOverlap
from ..model import BdRateResult, RdCurve

METHODS = ('auto', 'polynomial', 'pchip')
PCHIP_SAMPLES = 100


def _check_monotone(curve: RdCurve, name: str):
    rates, qualities = curve.rates, curve.qualities
    if np.any(np.diff(rates) <= 0) or np.any(np.diff(qualities) <= 0):
        raise DegenerateFit(f'{name} curve must increase strictly in both bitrate and quality')


def _interval(ref_x: np.ndarray, test_x: np.ndarray, axis: str) -> Tuple[float, float]:
    low = max(ref_x.min(), test_x.min())
    high = min(ref_x.max(), test_x.max())
    if low >= high:
        raise InsufficientOverlap(f'curves do not overlap on the {axis} axis: [{low:.4f}, {high:.4f}]')
    return float(low), float(high)


def _polynomial_integral(x: np.ndarray, y: np.ndarray, low: float, high: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter('error', RankWarning)
        coeffs = np.polyfit(x, y, 3)
    antiderivative = np.polyint(coeffs)
    return float(np.polyval(antiderivative, high) - np.polyval(antiderivative, low))


def _pchip_integral(x: np.ndarray, y: np.ndarray, low: float, high: float) -> float:
    samples = np.linspace(low, high, num=PCHIP_SAMPLES)
    values = interpolate.pchip_interpolate(x, y, samples)
    return float(integrate.trapezoid(values, samples))


def _average_difference(ref_x, ref_y, test_x, test_y, low, high, method) -> Tuple[float, str]:
    if method not in METHODS:
        raise ValueError(f'unknown fit method {method!r}, expected one of {METHODS}')
    if method != 'pchip':
        try:
            diff = _polynomial_integral(test_x, test_y, low, high) - _polynomial_integral(ref_x, ref_y, low, high)
            return diff / (high - low), 'polynomial'
        except (RankWarning, np.linalg.LinAlgError) as e:
            if method == 'polynomial':
                raise DegenerateFit(f'cubic fit is ill-conditioned: {e}') from e
            logging.warning('Cubic fit is ill-conditioned, falling back to PCHIP')
    diff = _pchip_integral(test_x, test_y, low, high) - _pchip_integral(ref_x, ref_y, low, high)
    return diff / (high - low), 'pchip'


def _identical(reference: RdCurve, test: RdCurve) -> bool:
    return (np.array_equal(reference.rates, test.rates)
            and np.array_equal(reference.qualities, test.qualities))


def bd_rate(reference: RdCurve, test: RdCurve, method: str = 'auto') -> BdRateResult:
    """Average bitrate difference of ``test`` against ``reference`` at equal quality, in percent.

    Negative values mean the test curve needs less rate.
    """
    if _identical(reference, test):
        return BdRateResult(percent=0.0, fit='identical')
    _check_monotone(reference, 'reference')
    _check_monotone(test, 'test')
    low, high = _interval(reference.qualities, test.qualities, 'quality')
    avg_diff, fit = _average_difference(reference.qualities, np.log10(reference.rates),
                                        test.qualities, np.log10(test.rates), low, high, method)
    return BdRateResult(percent=float((10 ** avg_diff - 1) * 100), fit=fit)


def bd_quality(reference: RdCurve, test: RdCurve, method: str = 'auto') -> BdRateResult:
    """Average quality difference (dB) of ``test`` against ``reference`` at equal bitrate."""
    if _identical(reference, test):
        return BdRateResult(percent=0.0, fit='identical')
    _check_monotone(reference, 'reference')
    _check_monotone(test, 'test')
    ref_log, test_log = np.log10(reference.rates), np.log10(test.rates)
    low, high = _interval(ref_log, test_log, 'bitrate')
    avg_diff, fit = _average_difference(ref_log, reference.qualities, test_log, test.qualities,
                                        low, high, method)
    return BdRateResult(percent=float(avg_diff), fit=fit)
