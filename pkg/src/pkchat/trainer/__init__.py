"""Training loop, example building, and checkpoint persistence."""

from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    CheckpointError,
    from_model,
    load_checkpoint,
    save_checkpoint,
    to_model,
)
from .examples import TrainExample, build_examples, split_scenarios
from .loop import TrainConfig, TrainDivergedError, train, write_trace

__all__ = [
    "FORMAT_VERSION", "MAGIC", "Checkpoint", "CheckpointError", "from_model",
    "load_checkpoint", "save_checkpoint", "to_model",
    "TrainExample", "build_examples", "split_scenarios",
    "TrainConfig", "TrainDivergedError", "train", "write_trace",
]
