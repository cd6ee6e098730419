import math
from typing import Sequence

import numpy as np

from ..errors import NonPositiveTime, ShapeMismatch
from ..model import ComplexityReport, FeatureTensorSet, QualityScore

# reported instead of an infinite PSNR on exact reconstruction
PSNR_CAP_DB = 100.0


def _mse(original: FeatureTensorSet, reconstructed: FeatureTensorSet) -> float:
    squared, count = 0.0, 0
    for frame_a, frame_b in zip(original.frames, reconstructed.frames):
        for layer_a, layer_b in zip(frame_a, frame_b):
            diff = layer_a.data.astype(np.float64) - layer_b.data.astype(np.float64)
            squared += float(np.sum(np.square(diff)))
            count += diff.size
    return squared / count


def _peak(fts: FeatureTensorSet) -> float:
    peak = max(float(np.max(np.abs(layer.data))) for frame in fts.frames for layer in frame)
    return peak if peak > 0 else 1.0


def quality_metric(original: FeatureTensorSet, reconstructed: FeatureTensorSet) -> QualityScore:
    """Feature PSNR, 10*log10(peak^2 / MSE) with peak = max|original|.

    Stands in for task accuracy; an exact match reports the capped value.
    """
    if (original.frame_count != reconstructed.frame_count
            or original.layer_shapes != reconstructed.layer_shapes):
        raise ShapeMismatch(f'original {original.frame_count}x{original.layer_shapes} and reconstruction '
                            f'{reconstructed.frame_count}x{reconstructed.layer_shapes} differ in shape')
    mse = _mse(original, reconstructed)
    if mse == 0:
        return QualityScore(psnr_db=PSNR_CAP_DB, mse=0.0, exact_match=True)
    psnr = 10.0 * math.log10(_peak(original) ** 2 / mse)
    return QualityScore(psnr_db=min(psnr, PSNR_CAP_DB), mse=mse)


def _check_times(**times: float):
    for name, value in times.items():
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveTime(f'{name} must be positive, got {value}')


def complexity_ratios(fcm_encoder_time: float, fcm_decoder_time: float,
                      nn_part1_time: float, nn_part2_time: float) -> ComplexityReport:
    """Encoder time over NN part 2 time and decoder time over NN part 1 time; both should stay below 1."""
    _check_times(fcm_encoder_time=fcm_encoder_time, fcm_decoder_time=fcm_decoder_time,
                 nn_part1_time=nn_part1_time, nn_part2_time=nn_part2_time)
    return ComplexityReport(fcm_encoder_time=fcm_encoder_time, fcm_decoder_time=fcm_decoder_time,
                            nn_part1_time=nn_part1_time, nn_part2_time=nn_part2_time,
                            encoder_ratio=fcm_encoder_time / nn_part2_time,
                            decoder_ratio=fcm_decoder_time / nn_part1_time)


def overall_complexity(reports: Sequence[ComplexityReport]) -> ComplexityReport:
    """Aggregates several datasets by summing each time before dividing."""
    if not reports:
        raise NonPositiveTime('no complexity reports to aggregate')
    return complexity_ratios(sum(r.fcm_encoder_time for r in reports),
                             sum(r.fcm_decoder_time for r in reports),
                             sum(r.nn_part1_time for r in reports),
                             sum(r.nn_part2_time for r in reports))


def bitrate_kbps(stream_bytes: int, frame_rate: float, frame_count: int) -> float:
    return stream_bytes * 8 * frame_rate / frame_count / 1000
