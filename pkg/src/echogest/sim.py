"""Acoustic scene simulator: the hardware stand-in.

Renders the two microphone streams produced by parametric scenes of moving
scatterers illuminated by the continuous two-band chirp transmission. Each of
the 22 action labels owns a distinct motion family (approach-dwell-retreat
for touch gestures, periodic oscillation for rubbing/brushing, slow sweeps
for head motions, near-static drift for the null class). Per-participant
parameter perturbations model cross-user variability; per-repetition jitter
models trial-to-trial variability.

Channel gain asymmetry encodes the two-transceiver geometry: the outward
sensor (mic0) sees the hand/face scatterer, the body-facing sensor (mic1)
sees the arm. Walking environments superimpose an arm-swing oscillation
track seen by both microphones; cafe/curbside add audible-band noise that
the ultrasonic band filters must reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chirp import generate_chirp
from .config import RANGE_BINS, TransmitConfig, default_transmit_config
from .echo import ReceivedAudio, band_filter
from .errors import PreconditionError, RegistryError
from .labels import GestureLabel, LabelRegistry, default_registry

DEFAULT_DURATION = 2.0
DEFAULT_NOISE_SIGMA = 0.012
ENVIRONMENTS = ("lab", "indoor_walk", "cafe", "curbside")

# fixed stream tags so every RNG draw has a stable, collision-free ancestry
_TAG = 0x4563_4753
_FAMILY, _REP, _SCENE, _GAIT, _GAIT_REP, _CLUTTER, _PSEED, _RSEED = range(1, 9)


def _rng(stream: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_TAG, stream, *map(int, keys)]))


def _derive_seed(stream: int, *keys: int) -> int:
    ss = np.random.SeedSequence([_TAG, stream, *map(int, keys)])
    return int(ss.generate_state(2, np.uint32).view(np.uint64)[0])


@dataclass(frozen=True)
class AudibleNoise:
    """Additive audible-band noise, synthesized band-limited per chirp frame
    so it stays strictly below f_hi as seen by the frame-synchronous FFT."""

    sigma: float
    f_lo: float = 150.0
    f_hi: float = 16_000.0


@dataclass
class ScattererTrack:
    """One moving reflector: round-trip delay (samples) and per-channel gain
    as functions of time. Gains for channels of a microphone that cannot see
    the reflector are zero."""

    delay_fn: Callable[[np.ndarray], np.ndarray]
    gain_fn: Callable[[np.ndarray], np.ndarray]  # (n,) times -> (n, 4) gains
    active: tuple[float, float] = (0.0, math.inf)
    name: str = ""


@dataclass
class Scene:
    tracks: list[ScattererTrack]
    noise_sigma: float
    duration: float
    seed: int
    audible_noise: AudibleNoise | None = None
    meta: dict = field(default_factory=dict)

    def validate(self):
        if self.duration < 1.0:
            raise PreconditionError(f"duration must be >= 1.0 s, got {self.duration}")
        if self.noise_sigma < 0:
            raise PreconditionError("noise_sigma must be >= 0")
        return self


def eval_trajectory(track: ScattererTrack, t) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a track at time(s) t; outside the active interval the gains
    are zeroed (inactive-track marker)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    delay = np.asarray(track.delay_fn(t_arr), dtype=np.float64)
    gains = np.asarray(track.gain_fn(t_arr), dtype=np.float64)
    inside = (t_arr >= track.active[0]) & (t_arr <= track.active[1])
    gains = np.where(inside[:, None], gains, 0.0)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(delay[0]), gains[0]
    return delay, gains


def render_received(
    scene: Scene, config: TransmitConfig | None = None
) -> tuple[ReceivedAudio, ReceivedAudio]:
    """Render both microphone streams for a scene.

    Each track contributes gain_{tx,mic}(t_n) * s_tx(n - delay(t_n)) for both
    transmit streams, with fractional delays linearly interpolated on the
    periodic chirp. Output length is duration*fs rounded down to whole frames.
    """
    config = config or default_transmit_config()
    scene.validate()
    fs = config.sample_rate
    frame_len = config.frame_len
    n_frames = int(scene.duration * fs) // frame_len
    n = n_frames * frame_len
    t = np.arange(n, dtype=np.float64) / fs
    chirps = (generate_chirp(config.tx_a), generate_chirp(config.tx_b))

    rx = np.zeros((2, n), dtype=np.float64)
    for track in scene.tracks:
        mask = (t >= track.active[0]) & (t <= track.active[1])
        if not mask.any():
            continue
        idx = np.nonzero(mask)[0]
        delay = np.asarray(track.delay_fn(t[idx]), dtype=np.float64)
        if delay.min() < 0.0 or delay.max() > RANGE_BINS - 1:
            raise PreconditionError(
                f"track {track.name!r} delay leaves the sensing range [0, {RANGE_BINS - 1}]"
            )
        gains = np.asarray(track.gain_fn(t[idx]), dtype=np.float64)
        if gains.min() < 0.0:
            raise PreconditionError(f"track {track.name!r} produced negative gains")
        q = idx - delay
        i0 = np.floor(q).astype(np.int64)
        frac = q - i0
        j0 = i0 % frame_len
        j1 = (i0 + 1) % frame_len
        one_minus = 1.0 - frac
        for tx in (0, 1):
            c = chirps[tx]
            v = one_minus * c[j0] + frac * c[j1]
            rx[0, idx] += gains[:, tx] * v
            rx[1, idx] += gains[:, 2 + tx] * v

    noise_ss = np.random.SeedSequence(scene.seed).spawn(2)
    if scene.noise_sigma > 0:
        rx += scene.noise_sigma * np.random.default_rng(noise_ss[0]).standard_normal((2, n))
    aud = scene.audible_noise
    if aud is not None and aud.sigma > 0:
        white = np.random.default_rng(noise_ss[1]).standard_normal((2, n_frames, frame_len))
        rx += aud.sigma * band_filter(white, (aud.f_lo, aud.f_hi), fs).reshape(2, n)
    return (
        ReceivedAudio(mic_id=0, samples=rx[0], sample_rate=fs),
        ReceivedAudio(mic_id=1, samples=rx[1], sample_rate=fs),
    )


# ---------------------------------------------------------------------------
# motion families

def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def _delay_closure(p: dict, duration: float) -> Callable[[np.ndarray], np.ndarray]:
    kind = p["kind"]
    c, a, r = p["center"], p["amp"], p["rate"]
    phase, onset = p["phase"], p["onset"]

    def delay(t, kind=kind, c=c, a=a, r=r, phase=phase, onset=onset, p=dict(p)):
        tau = np.asarray(t, dtype=np.float64) - onset
        if kind in ("sine", "drift"):
            d = c + a * np.sin(2 * np.pi * r * tau + phase)
        elif kind == "tap":
            d = c - a * np.abs(np.sin(np.pi * r * tau + phase / 2)) ** 4
        elif kind == "pulse":
            d = c - a * np.abs(np.sin(np.pi * r * tau + phase / 2)) ** 12
        elif kind == "asym":
            th = 2 * np.pi * r * tau + phase
            d = c + a * (np.sin(th) + 0.4 * np.sin(2 * th)) / 1.4
        elif kind == "burst":
            gate = np.abs(np.sin(np.pi * r * tau + phase / 2)) ** 6
            d = c - a * gate * np.abs(np.sin(2 * np.pi * p["rate_inner"] * tau + phase))
        elif kind == "sweep":
            theta = np.mod(r * tau + phase / (2 * np.pi), 1.0)
            env = _smoothstep(theta / 0.3) - _smoothstep((theta - 0.55) / 0.3)
            d = c + a * env
        elif kind == "adr":
            u = np.clip(tau / duration, 0.0, 1.0)
            env = _smoothstep((u - 0.10) / 0.22) - _smoothstep((u - 0.72) / 0.20)
            d = c + p["far"] * (1.0 - env) + env * p["amp2"] * np.sin(2 * np.pi * r * tau + phase)
        else:  # pragma: no cover - table is fixed
            raise PreconditionError(f"unknown motion kind {kind!r}")
        return np.clip(d, 1.0, RANGE_BINS - 2.0)

    return delay


def _const_gain_closure(gains4: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    gains4 = np.asarray(gains4, dtype=np.float64)

    def gain(t, gains4=gains4):
        return np.broadcast_to(gains4, (np.asarray(t).shape[0], 4))

    return gain


# nominal family table, keyed by label id:
#   (out kind, center, amp, rate, gain), (arm kind, center, amp, rate, gain), extras
_FAMILIES: dict[int, dict] = {
    0: dict(out=("adr", 72, 80, 6.0, 0.55), arm=("sine", 52, 3.5, 1.0, 0.45), out_far=80, out_amp2=2.5),
    1: dict(out=("tap", 88, 14, 2.4, 0.60), arm=("sine", 50, 3.0, 2.4, 0.50)),
    2: dict(out=("sine", 96, 11, 3.0, 0.65), arm=("sine", 54, 4.5, 3.0, 0.50)),
    3: dict(out=("sine", 74, 1.8, 5.5, 0.30), arm=("drift", 50, 1.2, 0.25, 0.30)),
    4: dict(out=("asym", 102, 9, 2.0, 0.60), arm=("sine", 56, 3.0, 2.0, 0.45)),
    5: dict(out=("pulse", 84, 18, 1.4, 0.60), arm=("tap", 52, 5.0, 1.4, 0.50)),
    6: dict(out=("sweep", 90, 16, 0.8, 0.60), arm=("drift", 53, 2.0, 0.30, 0.40)),
    7: dict(out=("adr", 95, 60, 0.6, 0.55), arm=("sine", 55, 2.5, 0.6, 0.45), out_far=60, out_amp2=3.5),
    8: dict(out=("burst", 112, 16, 0.9, 0.60), arm=("sine", 51, 3.0, 0.9, 0.45), out_rin=6.0),
    9: dict(out=("sine", 70, 5.5, 7.0, 0.55), arm=("drift", 49, 2.0, 0.30, 0.40)),
    10: dict(out=("adr", 58, 70, 0.8, 0.70), arm=("adr", 34, 34, 0.8, 0.65),
             out_far=70, out_amp2=4.0, arm_far=34, arm_amp2=2.0),
    11: dict(out=("sine", 90, 12, 4.2, 0.70), arm=("sine", 48, 9.0, 4.2, 0.65)),
    12: dict(out=("asym", 124, 7, 1.2, 0.60), arm=("sine", 58, 6.0, 1.2, 0.50)),
    13: dict(out=("burst", 66, 14, 0.8, 0.65), arm=("burst", 44, 8.0, 0.8, 0.55),
             out_rin=5.5, arm_rin=5.5),
    14: dict(out=("tap", 98, 10, 1.0, 0.60), arm=("sweep", 50, 12, 0.5, 0.55)),
    15: dict(out=("sine", 170, 13, 1.5, 0.50), arm=("drift", 50, 1.5, 0.20, 0.35)),
    16: dict(out=("sine", 150, 5.5, 3.4, 0.45), arm=("drift", 54, 1.5, 0.20, 0.35)),
    17: dict(out=("sweep", 158, 25, 0.5, 0.50), arm=("drift", 51, 1.5, 0.20, 0.35)),
    18: dict(out=("sweep", 158, -25, 0.5, 0.50), arm=("drift", 51, 1.5, 0.20, 0.35)),
    19: dict(out=("asym", 138, 10, 1.0, 0.50), arm=("drift", 50, 1.5, 0.20, 0.35)),
    20: dict(out=("tap", 182, 12, 1.9, 0.50), arm=("drift", 50, 1.5, 0.20, 0.35)),
    21: dict(out=("drift", 118, 1.2, 0.22, 0.30), arm=("drift", 52, 0.9, 0.18, 0.30)),
}


def _family_params(label_id: int, participant_seed: int, shift_scale: float) -> dict:
    """Nominal family parameters with the participant's consistent offsets."""
    fam = _FAMILIES[label_id]
    prng = _rng(_FAMILY, participant_seed, label_id)
    params = {}
    for role in ("out", "arm"):
        kind, center, amp, rate, gain = fam[role]
        center_span = 3.5 if role == "out" else 2.5
        p = dict(
            kind=kind,
            center=center + shift_scale * prng.uniform(-center_span, center_span),
            amp=amp * (1.0 + shift_scale * prng.uniform(-0.10, 0.10)),
            rate=rate * (1.0 + shift_scale * prng.uniform(-0.06, 0.06)),
            # repetitions are cued, so the motion is roughly time-locked to the
            # recording; phase idiosyncrasy stays moderate rather than uniform
            phase=shift_scale * prng.uniform(-0.7, 0.7),
            onset=0.0,
            gain_a=fam[role][4] * (1.0 + shift_scale * prng.uniform(-0.14, 0.14)),
            gain_b=fam[role][4] * (1.0 + shift_scale * prng.uniform(-0.14, 0.14)),
        )
        if f"{role}_far" in fam:
            p["far"] = fam[f"{role}_far"] * (1.0 + shift_scale * prng.uniform(-0.10, 0.10))
        if f"{role}_amp2" in fam:
            p["amp2"] = fam[f"{role}_amp2"] * (1.0 + shift_scale * prng.uniform(-0.10, 0.10))
        if f"{role}_rin" in fam:
            p["rate_inner"] = fam[f"{role}_rin"] * (1.0 + shift_scale * prng.uniform(-0.08, 0.08))
        params[role] = p
    return params


def _apply_jitter(params: dict, rrng: np.random.Generator, jitter: float) -> dict:
    """Per-repetition jitter; the draw sequence is fixed so jitter=0 yields
    the participant's base scene bit-for-bit."""
    out = {}
    for role in ("out", "arm"):
        p = dict(params[role])
        p["onset"] = jitter * rrng.uniform(0.0, 0.12)
        p["phase"] = p["phase"] + jitter * rrng.uniform(-0.6, 0.6)
        p["amp"] = p["amp"] * (1.0 + jitter * 0.06 * rrng.standard_normal())
        p["rate"] = p["rate"] * (1.0 + jitter * 0.05 * rrng.standard_normal())
        p["center"] = p["center"] + jitter * rrng.uniform(-1.5, 1.5)
        p["gain_a"] = p["gain_a"] * (1.0 + jitter * 0.08 * rrng.standard_normal())
        p["gain_b"] = p["gain_b"] * (1.0 + jitter * 0.08 * rrng.standard_normal())
        out[role] = p
    return out


def _role_tracks(params: dict, duration: float) -> list[ScattererTrack]:
    tracks = []
    for role, chans in (("out", (0, 1)), ("arm", (2, 3))):
        p = params[role]
        gains4 = np.zeros(4)
        gains4[chans[0]] = max(p["gain_a"], 0.0)
        gains4[chans[1]] = max(p["gain_b"], 0.0)
        tracks.append(
            ScattererTrack(
                delay_fn=_delay_closure(p, duration),
                gain_fn=_const_gain_closure(gains4),
                name=role,
            )
        )
    return tracks


def _gait_tracks(participant_seed: int, rep_seed: int, jitter: float) -> list[ScattererTrack]:
    """Whole-profile oscillation from walking: arm swing seen by both mics,
    plus slower passing-object reflections on the outward channels."""
    g = _rng(_GAIT, participant_seed)
    swing_rate = g.uniform(1.6, 2.2)
    swing_amp = g.uniform(13.0, 19.0)
    swing_center = g.uniform(38.0, 48.0)
    pass_rate = g.uniform(0.30, 0.45)
    rj = _rng(_GAIT_REP, participant_seed, rep_seed)
    phase = rj.uniform(0.0, 2 * np.pi)
    rate = swing_rate * (1.0 + jitter * 0.05 * rj.standard_normal())
    pass_phase = rj.uniform(0.0, 2 * np.pi)

    def swing_delay(t, c=swing_center, a=swing_amp, r=rate, ph=phase):
        return np.clip(c + a * np.sin(2 * np.pi * r * np.asarray(t) + ph), 1.0, RANGE_BINS - 2.0)

    def pass_delay(t, r=pass_rate, ph=pass_phase):
        return np.clip(120.0 + 45.0 * np.sin(2 * np.pi * r * np.asarray(t) + ph), 1.0, RANGE_BINS - 2.0)

    return [
        ScattererTrack(swing_delay, _const_gain_closure([0.45, 0.40, 0.50, 0.45]), name="gait_swing"),
        ScattererTrack(pass_delay, _const_gain_closure([0.25, 0.22, 0.0, 0.0]), name="gait_pass"),
    ]


def _clutter_track(participant_seed: int) -> ScattererTrack:
    """Static near-field reflection (strap/wrist); cancels in differential."""
    c = _rng(_CLUTTER, participant_seed)
    delay = c.uniform(8.0, 22.0)
    gains = c.uniform(0.25, 0.45, size=4)

    def const_delay(t, d=delay):
        return np.full(np.asarray(t).shape[0], d)

    return ScattererTrack(const_delay, _const_gain_closure(gains), name="clutter")


def gesture_scene(
    label,
    participant_seed: int,
    rep_seed: int,
    environment: str = "lab",
    *,
    registry: LabelRegistry | None = None,
    jitter_scale: float = 1.0,
    shift_scale: float = 1.0,
    duration: float = DEFAULT_DURATION,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> Scene:
    """Build the scene for one repetition of one label by one participant.

    participant_seed fixes the family-parameter perturbation (consistent for
    that participant across repetitions); rep_seed adds per-repetition
    jitter. The environment only adds tracks/noise on top of the identical
    gesture motion, so lab-vs-cafe pairs differ by audible noise alone.
    """
    registry = registry or default_registry()
    if not isinstance(label, GestureLabel):
        label = registry.get(label)
    if environment not in ENVIRONMENTS:
        raise RegistryError(f"unknown environment {environment!r}; pick from {ENVIRONMENTS}")

    base = _family_params(label.id, participant_seed, shift_scale)
    rrng = _rng(_REP, participant_seed, rep_seed, label.id)
    params = _apply_jitter(base, rrng, jitter_scale)

    tracks = _role_tracks(params, duration)
    tracks.append(_clutter_track(participant_seed))
    if environment in ("indoor_walk", "curbside"):
        tracks.extend(_gait_tracks(participant_seed, rep_seed, jitter_scale))

    audible = None
    if environment == "cafe":
        audible = AudibleNoise(sigma=0.35, f_lo=150.0, f_hi=16_000.0)
    elif environment == "curbside":
        audible = AudibleNoise(sigma=0.50, f_lo=80.0, f_hi=14_000.0)

    return Scene(
        tracks=tracks,
        noise_sigma=noise_sigma,
        duration=duration,
        seed=_derive_seed(_SCENE, participant_seed, rep_seed, label.id),
        audible_noise=audible,
        meta={"label": label.name, "environment": environment, "family": base, "rep": params},
    )


def participant_seed_for(dataset_seed: int, participant_id: int) -> int:
    return _derive_seed(_PSEED, dataset_seed, participant_id)


def rep_seed_for(dataset_seed: int, participant_id: int, session_id: int, repetition: int) -> int:
    return _derive_seed(_RSEED, dataset_seed, participant_id, session_id, repetition)
