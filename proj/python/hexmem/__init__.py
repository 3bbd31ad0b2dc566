"""Hex-grid memory tasks with adaptive difficulty controllers."""

from ._core import (
    ConfigError,
    DatabaseEntry,
    DifficultyModel,
    DomainError,
    FormatError,
    HexGrid,
    MemoryTask,
    ProtocolError,
    StateError,
    TaskDatabase,
    TaskFeatures,
    TrainingError,
    TrialOutcome,
    paired_t_test,
    pearson_r,
    reward,
    score_trial,
    simulate,
    task_difficulty,
    total_task_count,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
