from typing import List, Tuple

import numpy as np

from ..errors import MismatchError
from ..model import FeatureLayer, FeatureTensorSet, TemporalInfo

# Kept frames are the even indices 0, 2, 4, ...; this is a convention of the codec.
SAMPLING_RATIO = 2


def temporal_downsample(fts: FeatureTensorSet, enabled: bool) -> Tuple[FeatureTensorSet, TemporalInfo]:
    info = TemporalInfo(original_frame_count=fts.frame_count, enabled=enabled)
    if not enabled:
        return fts, info
    kept = fts.frames[::SAMPLING_RATIO]
    return FeatureTensorSet(frames=kept, frame_rate=fts.frame_rate), info


def _midpoint(prev: List[FeatureLayer], nxt: List[FeatureLayer]) -> List[FeatureLayer]:
    # With aligned spatial grids, trilinear interpolation at the temporal midpoint
    # is the elementwise mean of the two neighbours.
    return [
        FeatureLayer(data=((a.data.astype(np.float64) + b.data.astype(np.float64)) * 0.5).astype(np.float32))
        for a, b in zip(prev, nxt)
    ]


def temporal_upsample(fts: FeatureTensorSet, info: TemporalInfo) -> FeatureTensorSet:
    if fts.frame_count != info.coded_frame_count:
        raise MismatchError(f'{fts.frame_count} frames received, temporal info expects '
                            f'{info.coded_frame_count} of {info.original_frame_count}')
    if not info.enabled:
        return fts

    frames = []
    for i in range(info.original_frame_count):
        if i % SAMPLING_RATIO == 0:
            frames.append(fts.frames[i // SAMPLING_RATIO])
        elif i + 1 < info.original_frame_count:
            frames.append(_midpoint(fts.frames[i // SAMPLING_RATIO], fts.frames[i // SAMPLING_RATIO + 1]))
        else:
            # trailing frame has a single neighbour
            frames.append(fts.frames[-1])
    return FeatureTensorSet(frames=frames, frame_rate=fts.frame_rate)
