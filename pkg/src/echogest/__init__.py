"""echogest: ultrasonic two-band chirp sensing, differential echo profiles,
and transformer-based hand-face gesture recognition, validated end-to-end
against a built-in acoustic scene simulator."""

from .config import (
    ChirpSpec,
    TransmitConfig,
    SPEED_OF_SOUND,
    default_transmit_config,
)
from .chirp import generate_chirp, transmit_stream
from .echo import (
    DifferentialEchoProfile,
    EchoProfile,
    ReceivedAudio,
    band_filter,
    compute_echo_profile,
    differentiate,
    echo_frame,
)
from .labels import GestureLabel, LabelRegistry, default_registry, load_registry, save_registry
from .sim import (
    AudibleNoise,
    Scene,
    ScattererTrack,
    eval_trajectory,
    gesture_scene,
    render_received,
)
from .dataset import (
    DatasetManifest,
    ManifestRecord,
    WindowSet,
    build_window_set,
    load_manifest,
    synth_dataset,
    write_manifest,
)
from .windows import (
    EchoWindow,
    NormStats,
    augment_gaussian,
    crop_jitter,
    patchify,
    sliding_windows,
    unpatchify,
)
from .nn import (
    ModelConfig,
    focal_loss,
    forward,
    init_params,
    param_gradients,
    positional_encoding,
)
from .optim import AdamState, adam_step, cosine_lr
from .metrics import EvalReport, confusion_matrix, evaluate_predictions, macro_f1
from .train import (
    Checkpoint,
    FineTuneResult,
    LopoResult,
    TrainConfig,
    evaluate,
    fine_tune,
    load_checkpoint,
    lopo_evaluate,
    save_checkpoint,
    train_model,
)
from .estimator import ChannelNormalizer, EchoWindowClassifier
from .wsep import read_wsep, write_wsep

__version__ = "0.1.0"

__all__ = [
    "AudibleNoise", "AdamState", "ChannelNormalizer", "Checkpoint", "ChirpSpec",
    "DatasetManifest", "DifferentialEchoProfile", "EchoProfile", "EchoWindow",
    "EchoWindowClassifier", "EvalReport", "FineTuneResult", "GestureLabel",
    "LabelRegistry", "LopoResult", "ManifestRecord", "ModelConfig", "NormStats",
    "ReceivedAudio", "Scene", "ScattererTrack", "SPEED_OF_SOUND", "TrainConfig",
    "TransmitConfig", "WindowSet", "adam_step", "augment_gaussian", "band_filter",
    "build_window_set", "compute_echo_profile", "confusion_matrix", "cosine_lr",
    "crop_jitter", "default_registry", "default_transmit_config", "differentiate",
    "echo_frame", "eval_trajectory", "evaluate", "evaluate_predictions",
    "fine_tune", "focal_loss", "forward", "generate_chirp", "gesture_scene",
    "init_params", "load_checkpoint", "load_manifest", "load_registry",
    "lopo_evaluate", "macro_f1", "param_gradients", "patchify",
    "positional_encoding", "read_wsep", "render_received", "save_checkpoint",
    "save_registry", "sliding_windows", "synth_dataset", "train_model",
    "transmit_stream", "unpatchify", "write_manifest", "write_wsep",
]
