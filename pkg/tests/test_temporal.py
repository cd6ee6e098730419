import unittest

import numpy as np

from fcmcodec.backend.errors import MismatchError
from fcmcodec.backend.model import FeatureLayer, FeatureTensorSet, TemporalInfo
from fcmcodec.backend.models.temporal import temporal_downsample, temporal_upsample


def scalar_set(values, frame_rate=25.0) -> FeatureTensorSet:
    return FeatureTensorSet(frames=[[FeatureLayer(data=np.full((1, 2, 2), v, dtype=np.float32))] for v in values],
                            frame_rate=frame_rate)


def scalars(fts: FeatureTensorSet):
    return [float(frame[0].data[0, 0, 0]) for frame in fts.frames]


class TestTemporal(unittest.TestCase):
    def test_downsample_keeps_even_frames(self):
        coded, info = temporal_downsample(scalar_set([0, 1, 2, 3, 4]), enabled=True)
        self.assertEqual(scalars(coded), [0, 2, 4])
        self.assertEqual(info.original_frame_count, 5)
        self.assertEqual(info.coded_frame_count, 3)
        self.assertEqual(coded.frame_rate, 25.0)

    def test_disabled_is_identity(self):
        fts = scalar_set([3, 1, 4])
        coded, info = temporal_downsample(fts, enabled=False)
        self.assertIs(coded, fts)
        self.assertIs(temporal_upsample(coded, info), fts)

    def test_upsample_interpolates_midpoints(self):
        coded, info = temporal_downsample(scalar_set([0, 9, 2, 9, 6]), enabled=True)
        restored = temporal_upsample(coded, info)
        self.assertEqual(scalars(restored), [0, 1, 2, 4, 6])

    def test_trailing_frame_replicated(self):
        coded, info = temporal_downsample(scalar_set([1, 5, 3, 7]), enabled=True)
        restored = temporal_upsample(coded, info)
        self.assertEqual(scalars(restored), [1, 2, 3, 3])

    def test_single_frame(self):
        coded, info = temporal_downsample(scalar_set([8]), enabled=True)
        self.assertEqual(info.coded_frame_count, 1)
        self.assertEqual(scalars(temporal_upsample(coded, info)), [8])

    def test_constant_set_survives(self):
        restored = temporal_upsample(*temporal_downsample(scalar_set([2.5] * 6), enabled=True))
        self.assertEqual(scalars(restored), [2.5] * 6)

    def test_frame_count_mismatch(self):
        info = TemporalInfo(original_frame_count=6, enabled=True)
        with self.assertRaises(MismatchError):
            temporal_upsample(scalar_set([1, 2]), info)


if __name__ == '__main__':
    unittest.main()
