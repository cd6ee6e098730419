import unittest

import numpy as np

from fcmcodec.backend.errors import DegenerateFit, InsufficientOverlap
from fcmcodec.backend.model import RdCurve
from fcmcodec.backend.models.bjontegaard import bd_quality, bd_rate

RATES = [100.0, 180.0, 350.0, 700.0, 1300.0]
QUALITIES = [30.0, 32.5, 35.0, 37.0, 38.5]


def curve(rates, qualities) -> RdCurve:
    return RdCurve.from_pairs(list(zip(rates, qualities)))


class TestBjontegaard(unittest.TestCase):
    def setUp(self):
        self.reference = curve(RATES, QUALITIES)

    def test_identical_curves(self):
        result = bd_rate(self.reference, curve(RATES, QUALITIES))
        self.assertEqual(result.percent, 0.0)
        self.assertEqual(result.fit, 'identical')

    def test_scaled_rates(self):
        for factor, expected in ((2.0, 100.0), (0.5, -50.0), (4.0, 300.0)):
            scaled = curve([r * factor for r in RATES], QUALITIES)
            result = bd_rate(self.reference, scaled)
            self.assertEqual(result.fit, 'polynomial')
            self.assertAlmostEqual(result.percent, expected, delta=0.1)

    def test_scaled_rates_pchip(self):
        result = bd_rate(self.reference, curve([r * 2 for r in RATES], QUALITIES), method='pchip')
        self.assertEqual(result.fit, 'pchip')
        self.assertAlmostEqual(result.percent, 100.0, delta=0.1)

    def test_antisymmetry(self):
        test = curve([90.0, 200.0, 330.0, 720.0, 1200.0], [30.5, 32.0, 35.5, 37.2, 39.0])
        forward = bd_rate(self.reference, test).percent
        backward = bd_rate(test, self.reference).percent
        self.assertAlmostEqual((1 + forward / 100) * (1 + backward / 100), 1.0, delta=1e-3)

    def test_partial_overlap(self):
        test = curve([r * 0.8 for r in RATES], [q + 1.0 for q in QUALITIES])
        self.assertLess(bd_rate(self.reference, test).percent, 0)

    def test_no_overlap(self):
        test = curve(RATES, [q + 20.0 for q in QUALITIES])
        with self.assertRaises(InsufficientOverlap):
            bd_rate(self.reference, test)

    def test_non_monotone_quality(self):
        test = curve(RATES, [30.0, 34.0, 33.0, 37.0, 38.5])
        with self.assertRaises(DegenerateFit):
            bd_rate(self.reference, test)

    def test_too_few_points(self):
        with self.assertRaises(DegenerateFit):
            curve(RATES[:3], QUALITIES[:3])

    def test_points_are_sorted(self):
        shuffled = curve(RATES[::-1], QUALITIES[::-1])
        np.testing.assert_array_equal(shuffled.rates, RATES)

    def test_bd_quality(self):
        result = bd_quality(self.reference, curve(RATES, [q + 1.0 for q in QUALITIES]))
        self.assertAlmostEqual(result.percent, 1.0, places=6)

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            bd_rate(self.reference, curve([r * 2 for r in RATES], QUALITIES), method='spline')


if __name__ == '__main__':
    unittest.main()
