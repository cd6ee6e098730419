import math
import unittest

import numpy as np

from fcmcodec.backend.errors import NonPositiveTime, ShapeMismatch
from fcmcodec.backend.model import FeatureLayer, FeatureTensorSet
from fcmcodec.backend.models.metrics import (PSNR_CAP_DB, bitrate_kbps, complexity_ratios, overall_complexity,
                                             quality_metric)
from tests.fixtures import random_set


def single(values) -> FeatureTensorSet:
    return FeatureTensorSet(frames=[[FeatureLayer.from_values(1, 2, 2, values)]], frame_rate=30.0)


class TestQualityMetric(unittest.TestCase):
    def test_exact_match(self):
        fts = random_set(np.random.default_rng(0), frames=1)
        score = quality_metric(fts, fts)
        self.assertTrue(score.exact_match)
        self.assertEqual(score.psnr_db, PSNR_CAP_DB)
        self.assertEqual(score.mse, 0.0)

    def test_hand_computed(self):
        score = quality_metric(single([1, 0, 0, 0]), single([0, 0, 0, 0]))
        self.assertAlmostEqual(score.mse, 0.25)
        self.assertAlmostEqual(score.psnr_db, 10 * math.log10(4.0))
        self.assertFalse(score.exact_match)

    def test_sign_flip(self):
        a, b = [0.5, -1.0, 2.0, 0.25], [0.4, -0.9, 2.2, 0.0]
        first = quality_metric(single(a), single(b))
        flipped = quality_metric(single([-v for v in a]), single([-v for v in b]))
        self.assertAlmostEqual(first.psnr_db, flipped.psnr_db)

    def test_zero_original(self):
        score = quality_metric(single([0, 0, 0, 0]), single([0.1, 0, 0, 0]))
        self.assertAlmostEqual(score.psnr_db, 10 * math.log10(1 / 0.0025), places=4)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(1)
        with self.assertRaises(ShapeMismatch):
            quality_metric(random_set(rng, frames=2), random_set(rng, frames=3))

    def test_bitrate(self):
        self.assertEqual(bitrate_kbps(1000, 30.0, 3), 80.0)


class TestComplexity(unittest.TestCase):
    def test_encoder_ratio(self):
        report = complexity_ratios(12.0, 0.3, 1.0, 1.0)
        self.assertEqual(report.encoder_ratio, 12.0)
        self.assertFalse(report.encoder_satisfied)
        self.assertEqual(report.decoder_ratio, 0.3)
        self.assertTrue(report.decoder_satisfied)

    def test_exact_division(self):
        report = complexity_ratios(7.3, 2.9, 1.7, 3.1)
        self.assertEqual(report.encoder_ratio, 7.3 / 3.1)
        self.assertEqual(report.decoder_ratio, 2.9 / 1.7)

    def test_boundary(self):
        report = complexity_ratios(2.0, 2.0, 2.0, 2.0)
        self.assertEqual(report.encoder_ratio, 1.0)
        self.assertFalse(report.encoder_satisfied)
        self.assertFalse(report.decoder_satisfied)

    def test_non_positive(self):
        with self.assertRaises(NonPositiveTime):
            complexity_ratios(1.0, 0.0, 1.0, 1.0)
        with self.assertRaises(NonPositiveTime):
            complexity_ratios(1.0, 1.0, -1.0, 1.0)

    def test_overall(self):
        report = overall_complexity([complexity_ratios(10.0, 1.0, 4.0, 1.0),
                                     complexity_ratios(2.0, 1.0, 4.0, 3.0)])
        self.assertEqual(report.encoder_ratio, 3.0)
        self.assertEqual(report.decoder_ratio, 0.25)


if __name__ == '__main__':
    unittest.main()
