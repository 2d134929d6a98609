"""Dataset synthesis and manifest handling.

A dataset is a directory of per-repetition `.f32x2` audio and `.wsep` echo
profiles plus a tab-separated manifest. Profiles are computed from the
float32-quantized audio actually written to disk, so re-running the profiling
step on the stored audio reproduces the stored profiles bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path, PurePosixPath

import numpy as np

from .audio_io import write_f32x2
from .config import TransmitConfig, default_transmit_config
from .echo import ReceivedAudio, compute_echo_profile, differentiate
from .errors import EchogestError, PreconditionError
from .labels import LabelRegistry, default_registry
from .sim import (
    DEFAULT_DURATION,
    DEFAULT_NOISE_SIGMA,
    ENVIRONMENTS,
    gesture_scene,
    participant_seed_for,
    render_received,
    rep_seed_for,
)
from .windows import sliding_windows
from .wsep import read_wsep, write_wsep

MANIFEST_NAME = "manifest.tsv"
MANIFEST_FIELDS = (
    "participant_id", "session_id", "repetition", "label_id", "label_name",
    "category", "environment", "audio_path", "profile_path",
)


@dataclass(frozen=True)
class ManifestRecord:
    participant_id: int
    session_id: int
    repetition: int
    label_id: int
    label_name: str
    category: str
    environment: str
    audio_path: str   # relative to the manifest directory, POSIX separators
    profile_path: str

    @property
    def record_id(self) -> str:
        return f"p{self.participant_id}_s{self.session_id}_r{self.repetition}_l{self.label_id:02d}"


@dataclass
class DatasetManifest:
    root: Path
    records: list[ManifestRecord]

    @property
    def participants(self) -> list[int]:
        return sorted({r.participant_id for r in self.records})

    def subset(self, keep) -> "DatasetManifest":
        return DatasetManifest(self.root, [r for r in self.records if keep(r)])


def write_manifest(manifest: DatasetManifest, path=None) -> Path:
    path = Path(path) if path else manifest.root / MANIFEST_NAME
    lines = []
    for r in manifest.records:
        lines.append("\t".join(str(v) for v in (
            r.participant_id, r.session_id, r.repetition, r.label_id, r.label_name,
            r.category, r.environment, r.audio_path, r.profile_path,
        )))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != len(MANIFEST_FIELDS):
            raise EchogestError(
                f"{path}:{lineno}: expected {len(MANIFEST_FIELDS)} fields, got {len(parts)}"
            )
        records.append(ManifestRecord(
            participant_id=int(parts[0]), session_id=int(parts[1]), repetition=int(parts[2]),
            label_id=int(parts[3]), label_name=parts[4], category=parts[5],
            environment=parts[6], audio_path=parts[7], profile_path=parts[8],
        ))
    keys = [(r.participant_id, r.session_id, r.repetition, r.label_id) for r in records]
    if len(set(keys)) != len(keys):
        raise EchogestError(f"{path}: duplicate (participant, session, repetition, label) records")
    manifest = DatasetManifest(root=path.parent, records=records)
    for r in records:
        for rel in (r.audio_path, r.profile_path):
            if not (manifest.root / rel).exists():
                raise EchogestError(f"{path}: referenced file missing: {rel}")
    return manifest


def synth_dataset(
    n_participants: int,
    n_sessions: int,
    n_reps: int,
    environments,
    seed: int,
    out_dir,
    *,
    registry: LabelRegistry | None = None,
    config: TransmitConfig | None = None,
    duration: float = DEFAULT_DURATION,
    jitter_scale: float = 1.0,
    shift_scale: float = 1.0,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    participant_ids=None,
) -> DatasetManifest:
    """Render a labeled multi-participant dataset onto disk.

    Covers all 22 labels x participants x sessions x reps. Sessions cycle
    through the environments list. Fully deterministic in (args, seed);
    partially written output is removed if anything fails.
    """
    if min(n_participants, n_sessions, n_reps) < 1:
        raise PreconditionError("participant/session/rep counts must all be >= 1")
    if isinstance(environments, str):
        environments = [environments]
    environments = list(environments)
    for env in environments:
        if env not in ENVIRONMENTS:
            raise PreconditionError(f"unknown environment {env!r}; pick from {ENVIRONMENTS}")
    registry = registry or default_registry()
    config = config or default_transmit_config()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if participant_ids is None:
        participant_ids = list(range(n_participants))
    elif len(participant_ids) != n_participants:
        raise PreconditionError("participant_ids length must equal n_participants")

    records: list[ManifestRecord] = []
    created: list[Path] = []
    try:
        for pid in participant_ids:
            pseed = participant_seed_for(seed, pid)
            for sid in range(n_sessions):
                env = environments[sid % len(environments)]
                rec_dir = out_dir / f"p{pid:03d}" / f"s{sid:02d}"
                rec_dir.mkdir(parents=True, exist_ok=True)
                for rep in range(n_reps):
                    rseed = rep_seed_for(seed, pid, sid, rep)
                    for label in registry:
                        scene = gesture_scene(
                            label, pseed, rseed, env,
                            registry=registry, jitter_scale=jitter_scale,
                            shift_scale=shift_scale, duration=duration,
                            noise_sigma=noise_sigma,
                        )
                        mic0, mic1 = render_received(scene, config)
                        stereo32 = np.stack([mic0.samples, mic1.samples]).astype(np.float32)
                        stem = f"r{rep}_l{label.id:02d}"
                        audio_path = rec_dir / f"{stem}.f32x2"
                        profile_path = rec_dir / f"{stem}.wsep"
                        write_f32x2(audio_path, stereo32)
                        created.append(audio_path)
                        # profile computed from the quantized audio that was stored
                        quantized = (
                            ReceivedAudio(0, stereo32[0].astype(np.float64), config.sample_rate),
                            ReceivedAudio(1, stereo32[1].astype(np.float64), config.sample_rate),
                        )
                        write_wsep(profile_path, compute_echo_profile(quantized, config))
                        created.append(profile_path)
                        records.append(ManifestRecord(
                            participant_id=pid, session_id=sid, repetition=rep,
                            label_id=label.id, label_name=label.name, category=label.category,
                            environment=env,
                            audio_path=str(PurePosixPath(audio_path.relative_to(out_dir))),
                            profile_path=str(PurePosixPath(profile_path.relative_to(out_dir))),
                        ))
        manifest = DatasetManifest(root=out_dir, records=records)
        manifest_path = write_manifest(manifest)
        created.append(manifest_path)
        return manifest
    except BaseException:
        for p in created:
            try:
                p.unlink()
            except OSError:
                pass
        raise


@dataclass
class WindowSet:
    """Flat arrays of labeled windows with provenance, ready for training.

    X is kept float32 (the on-disk precision); batches are upcast to float64
    at the model boundary.
    """

    X: np.ndarray            # (n, 4, 200, 83) float32
    y: np.ndarray            # (n,) int64 label ids
    participant: np.ndarray  # (n,) int64
    session: np.ndarray      # (n,) int64
    record_ids: list[str]
    window_index: np.ndarray  # (n,) int64

    def __len__(self) -> int:
        return self.X.shape[0]

    def select(self, mask: np.ndarray) -> "WindowSet":
        idx = np.nonzero(mask)[0]
        return WindowSet(
            X=self.X[idx], y=self.y[idx],
            participant=self.participant[idx], session=self.session[idx],
            record_ids=[self.record_ids[i] for i in idx],
            window_index=self.window_index[idx],
        )


def build_window_set(manifest: DatasetManifest, records=None) -> WindowSet:
    """Load profiles, differentiate, window, and stack. Windows are ordered by
    manifest order then window index, so the result is deterministic."""
    records = manifest.records if records is None else records
    if not records:
        raise PreconditionError("no records to build windows from")
    xs, ys, ps, ss, rids, wis = [], [], [], [], [], []
    for rec in records:
        profile = read_wsep(manifest.root / rec.profile_path)
        diff = differentiate(profile)
        for win in sliding_windows(diff, rec.label_id, rec.record_id):
            xs.append(win.values.astype(np.float32))
            ys.append(rec.label_id)
            ps.append(rec.participant_id)
            ss.append(rec.session_id)
            rids.append(rec.record_id)
            wis.append(win.window_index)
    return WindowSet(
        X=np.stack(xs), y=np.asarray(ys, dtype=np.int64),
        participant=np.asarray(ps, dtype=np.int64), session=np.asarray(ss, dtype=np.int64),
        record_ids=rids, window_index=np.asarray(wis, dtype=np.int64),
    )
