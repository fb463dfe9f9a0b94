"""GAN-based anomaly detection for IoT network traffic.

The pipeline: capture (or simulate) packets, extract windowed per-device
flow features, train a bidirectional GAN on normal traffic, and flag
vectors the model cannot reconstruct. Random-forest and gradient-boosting
baselines ride along for comparison.
"""

from .errors import GanidsError
from .packets import PacketRecord, Protocol, TcpFlags, parse_pcap, write_pcap
from .features import (DeviceTracker, FeatureVector, Label, feature_vector,
                       read_feature_csv, write_feature_csv)
from .gan import GanModel, TrainConfig, anomaly_score, score_batch, train_gan
from .ensembles import (BoostConfig, ForestConfig, predict, predict_batch,
                        train_boost, train_forest)
from .metrics import Metrics, precision_recall, sweep_thresholds, time_inference
from .simulate import DatasetSpec, builtin_scenario, generate_dataset, load_scenario
from .checkpoint import load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "GanidsError",
    "PacketRecord", "Protocol", "TcpFlags", "parse_pcap", "write_pcap",
    "DeviceTracker", "FeatureVector", "Label", "feature_vector",
    "read_feature_csv", "write_feature_csv",
    "GanModel", "TrainConfig", "anomaly_score", "score_batch", "train_gan",
    "BoostConfig", "ForestConfig", "predict", "predict_batch",
    "train_boost", "train_forest",
    "Metrics", "precision_recall", "sweep_thresholds", "time_inference",
    "DatasetSpec", "builtin_scenario", "generate_dataset", "load_scenario",
    "load_checkpoint", "save_checkpoint",
    "__version__",
]
