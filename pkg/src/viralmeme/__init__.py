"""Predict meme popularity classes from the first adoption events.

Topology and community features of a meme's early window feed a random
forest, which is compared with five baselines under stratified
cross-validation.
"""
from .cascade import AdoptionEvent, EarlyWindow, Meme, early_window, parse_events, read_events
from .community import CommunityAssignment, detect_label_propagation, read_assignments
from .evaluation import cross_validate, f1_report, popularity_class, stratified_folds
from .features import FEATURE_NAMES, FeatureVector, extract_all
from .forest import ForestConfig, RandomForest, load_model, save_model, train
from .graph import Network, load_network, pagerank, read_network, shortest_path_length, surface
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AdoptionEvent", "BACKEND", "CommunityAssignment", "EarlyWindow", "FEATURE_NAMES",
    "FeatureVector", "ForestConfig", "Meme", "Network", "RandomForest", "cross_validate",
    "detect_label_propagation", "early_window", "extract_all", "f1_report", "load_model",
    "load_network", "pagerank", "parse_events", "popularity_class", "read_assignments",
    "read_events", "read_network", "save_model", "shortest_path_length", "stratified_folds",
    "surface", "train",
]
