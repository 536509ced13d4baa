from .assignment import Assignment, cosine, iou, iou_matrix, solve_assignment
from .kalman import KalmanParams, Tracklet, box_to_z, kalman_predict, kalman_update, z_to_box
from .scorer import (
    HIDDEN,
    N_INPUTS,
    Scorer,
    TrainHyperparams,
    TrainingSequence,
    build_pairs,
    fit_scorer,
    loss_and_grad,
    pair_features,
    train_scorer,
)
from .tracker import TrackerConfig, score_matrix, track_sequence

__all__ = [
    "Assignment", "cosine", "iou", "iou_matrix", "solve_assignment",
    "KalmanParams", "Tracklet", "box_to_z", "kalman_predict", "kalman_update", "z_to_box",
    "HIDDEN", "N_INPUTS", "Scorer", "TrainHyperparams", "TrainingSequence", "build_pairs",
    "fit_scorer", "loss_and_grad", "pair_features", "train_scorer",
    "TrackerConfig", "score_matrix", "track_sequence",
]
