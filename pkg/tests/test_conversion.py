import unittest

import numpy as np

from fcmcodec.backend.errors import FormatError, SampleRangeError, ShapeError
from fcmcodec.backend.model import FrameLayout, FusedTensor, PackedFrame, QuantizationParams
from fcmcodec.backend.models.conversion import (dequantize, grid_for_channels, layout_for, pack,
                                                quantization_params, quantize, unpack)


class TestPacking(unittest.TestCase):
    def test_grid_rule(self):
        self.assertEqual(grid_for_channels(1), (1, 1))
        self.assertEqual(grid_for_channels(8), (3, 3))
        self.assertEqual(grid_for_channels(9), (3, 3))
        self.assertEqual(grid_for_channels(10), (3, 4))
        self.assertEqual(grid_for_channels(336), (18, 19))

    def test_raster_placement(self):
        data = np.stack([np.full((2, 3), c, dtype=np.float32) for c in range(8)])
        frame = pack(FusedTensor(data=data))
        self.assertEqual(frame.samples.shape, (6, 9))
        # channel 4 sits in grid row 1, column 1
        np.testing.assert_array_equal(frame.samples[2:4, 3:6], 4)
        # the ninth cell is zero padding
        np.testing.assert_array_equal(frame.samples[4:6, 6:9], 0)

    def test_pack_unpack_bijection(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            shape = (int(rng.integers(1, 40)), int(rng.integers(1, 9)), int(rng.integers(1, 9)))
            data = rng.standard_normal(shape).astype(np.float32)
            frame = pack(FusedTensor(data=data, gain_index=2))
            self.assertEqual(frame.gain_index, 2)
            restored = unpack(frame)
            np.testing.assert_array_equal(restored.data, data)

    def test_layout_rejects_loose_grid(self):
        with self.assertRaises(ShapeError):
            FrameLayout(grid_rows=4, grid_cols=3, source_shape=(8, 2, 2))

    def test_unpack_checks_dims(self):
        layout = layout_for((4, 2, 2))
        with self.assertRaises(ShapeError):
            PackedFrame(layout=layout, samples=np.zeros((4, 5), dtype=np.float32))

    def test_sample_range(self):
        layout = layout_for((1, 2, 2))
        with self.assertRaises(SampleRangeError):
            PackedFrame(layout=layout, samples=np.full((2, 2), 70000, dtype=np.int64))


class TestQuantization(unittest.TestCase):
    def test_error_bound(self):
        rng = np.random.default_rng(5)
        layout = layout_for((1, 4, 4))
        for bitdepth in (8, 10, 12):
            for _ in range(10000 // 3):
                values = (rng.standard_normal((4, 4)) * rng.uniform(0.01, 100)).astype(np.float32)
                fused = FusedTensor(data=values[None])
                params = quantization_params(fused, bitdepth)
                frame = PackedFrame(layout=layout, samples=values)
                codes = quantize(frame, params)
                self.assertTrue(codes.is_quantized)
                self.assertLessEqual(int(codes.samples.max()), params.max_num_bits)
                restored = dequantize(codes, params).samples.astype(np.float64)
                step = (params.x_max - params.x_min) / params.max_num_bits
                # bounds are stored as float32, so allow their rounding on top of one step
                slack = 2 * np.spacing(np.float32(max(abs(params.x_min), abs(params.x_max))))
                self.assertLessEqual(float(np.max(np.abs(restored - values))), step + slack)

    def test_degenerate_range(self):
        layout = layout_for((1, 2, 2))
        frame = PackedFrame(layout=layout, samples=np.full((2, 2), 3.25, dtype=np.float32))
        params = QuantizationParams(bitdepth=10, x_min=3.25, x_max=3.25)
        codes = quantize(frame, params)
        np.testing.assert_array_equal(codes.samples, 0)
        np.testing.assert_array_equal(dequantize(codes, params).samples, 3.25)

    def test_extremes(self):
        layout = layout_for((1, 1, 2))
        frame = PackedFrame(layout=layout, samples=np.array([[-1.0, 1.0]], dtype=np.float32))
        params = QuantizationParams(bitdepth=8, x_min=-1.0, x_max=1.0)
        np.testing.assert_array_equal(quantize(frame, params).samples, [[0, 255]])

    def test_stats_skip_padding(self):
        data = np.full((2, 2, 2), 5.0, dtype=np.float32)
        params = quantization_params(FusedTensor(data=data), 10)
        self.assertEqual((params.x_min, params.x_max), (5.0, 5.0))

    def test_params_validation(self):
        with self.assertRaises(FormatError):
            QuantizationParams(bitdepth=7, x_min=0.0, x_max=1.0)
        with self.assertRaises(FormatError):
            QuantizationParams(bitdepth=10, x_min=2.0, x_max=1.0)


if __name__ == '__main__':
    unittest.main()
