"""vidgeo: video geolocation by geotagged image retrieval and vote aggregation."""

from .clustering import NOISE, DbscanParams, dbscan, winning_cluster
from .descriptor import Heatmap, l2_distance, normalize, occlusion_heatmap
from .errors import DegenerateInputError, FormatError, InvalidArgumentError, VidgeoError
from .evaluation import (
    EvalConfig,
    PrecisionCurve,
    compare_methods,
    oracle,
    precision_at,
    random_baseline,
)
from .geo import GeoPoint, PlanarPoint, haversine_distance, project_local
from .index import Index, IndexConfig, RankedCandidate, build_index, load_index, save_index
from .keyframes import KeyframeConfig, manhattan, rgb_histogram, select_keyframes
from .store import ReferenceRecord, read_csv, read_store, write_csv, write_store
from .synth import SyntheticWorld, WorldSpec, generate_video, generate_videos, generate_world
from .voting import (
    AggregationConfig,
    Keyframe,
    Prediction,
    VideoQuery,
    aggregate,
    blended_vote,
    density_vote,
    local_match_score,
    retrieve_candidates,
    simple_vote,
    weighted_rank_vote,
)

__version__ = "0.1.0"
