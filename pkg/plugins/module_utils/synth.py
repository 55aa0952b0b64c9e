# -*- coding: utf-8 -*-
"""
Synthetic gait recordings with annotated freezing episodes.

Functional gait is a sinusoidal stride cycle (left and right legs in
anti-phase) superimposed on forward pelvis progression. During a freezing
episode progression stops and the stride phase is held; the legs then either
tremble in the 3-8 Hz freeze band or stay still (akinesia). Gaussian
measurement noise is added to every marker coordinate.
"""

from __future__ import absolute_import, division, print_function

import logging
from typing import List, Tuple

import numpy as np

from .config import SynthConfig
from .data import Trial
from .exceptions import SynthesisError
from .model import FG, FOG
from .skeleton import DEFAULT_MARKERS

__metaclass__ = type

STYLE_TREMBLING = "trembling"
STYLE_AKINESIA = "akinesia"

# neutral standing posture (forward, lateral, vertical) in millimeters
MARKER_LAYOUT = {
    "LASI": (120.0, 120.0, 950.0),
    "RASI": (120.0, -120.0, 950.0),
    "SACR": (-60.0, 0.0, 960.0),
    "LKNE": (20.0, 100.0, 500.0),
    "LANK": (-10.0, 90.0, 80.0),
    "LTOE": (140.0, 90.0, 30.0),
    "RKNE": (20.0, -100.0, 500.0),
    "RANK": (-10.0, -90.0, 80.0),
    "RTOE": (140.0, -90.0, 30.0),
}
# share of the stride amplitude each leg marker swings through
SWING_GAIN = {"KNE": 0.5, "ANK": 1.0, "TOE": 1.0}
LIFT_RATIO = 0.2
PELVIS_BOUNCE = 10.0

logger = logging.getLogger(__name__)


def subject_id(index: int) -> str:
    return f"S{index + 1:02d}"


def trial_id(subject: int, trial: int) -> str:
    return f"{subject_id(subject)}_T{trial + 1:02d}"


def place_episodes(
    num_samples: int, durations: List[int], rng: np.random.Generator
) -> List[Tuple[int, int]]:
    """
    Place episodes in temporal order with at least one gait sample between them.

    Returns:
        ``(start, end)`` sample ranges

    Raises:
        SynthesisError: If the episodes cannot fit in the trial
    """
    if not durations:
        return []
    free = num_samples - sum(durations) - (len(durations) - 1)
    if free < 0:
        raise SynthesisError(
            f"{len(durations)} episodes totalling {sum(durations)} samples do not fit in a "
            f"trial of {num_samples} samples",
            samples=num_samples,
            episode_samples=sum(durations),
        )
    cuts = np.sort(rng.integers(0, free + 1, size=len(durations)))
    gaps = np.diff(np.concatenate(([0], cuts)))
    ranges = []
    cursor = 0
    for i, (gap, duration) in enumerate(zip(gaps, durations)):
        start = cursor + int(gap) + (1 if i else 0)
        ranges.append((start, start + duration))
        cursor = start + duration
    return ranges


def fit_durations(durations: List[int], num_samples: int, minimum: int, keep: int) -> List[int]:
    """
    Shorten a draw of episode durations until it fits in ``num_samples``.

    Trailing episodes beyond ``keep`` are dropped first; the rest are scaled
    down and then trimmed longest first, never below ``minimum``.

    Raises:
        SynthesisError: If ``keep`` episodes of ``minimum`` samples cannot fit
    """
    durations = list(durations)
    while len(durations) > keep and sum(durations) + len(durations) - 1 > num_samples:
        durations.pop()
    budget = num_samples - max(len(durations) - 1, 0)
    if sum(durations) <= budget:
        return durations
    if len(durations) * minimum > budget:
        raise SynthesisError(
            f"{len(durations)} episodes of at least {minimum} samples do not fit in a "
            f"trial of {num_samples} samples",
            samples=num_samples,
            episode_samples=len(durations) * minimum,
        )
    scale = budget / sum(durations)
    durations = [max(minimum, int(d * scale)) for d in durations]
    while sum(durations) > budget:
        durations[int(np.argmax(durations))] -= 1
    return durations


def _episode_plan(
    cfg: SynthConfig, num_samples: int, rng: np.random.Generator
) -> List[Tuple[int, int, str]]:
    if rng.random() >= cfg.fog_rate:
        return []
    count = int(rng.integers(cfg.episodes_min, cfg.episodes_max + 1))
    seconds = np.maximum(
        rng.normal(cfg.episode_duration_mean, cfg.episode_duration_sd, size=count),
        cfg.episode_duration_min,
    )
    durations = [max(1, int(round(s * cfg.sample_rate))) for s in seconds]
    durations = fit_durations(
        durations, num_samples, cfg.min_episode_samples, cfg.episodes_min
    )
    ranges = place_episodes(num_samples, durations, rng)
    styles = [
        STYLE_TREMBLING if rng.random() < cfg.trembling_fraction else STYLE_AKINESIA
        for _ in ranges
    ]
    return [(start, end, style) for (start, end), style in zip(ranges, styles)]


def synthesize_trial(
    cfg: SynthConfig,
    subject: int,
    trial: int,
    rng: np.random.Generator,
    amplitude_scale: float = 1.0,
) -> Trial:
    """Generate one trial; ``rng`` is consumed in a fixed order."""
    fs = cfg.sample_rate
    num_samples = int(round(rng.uniform(cfg.trial_duration_min, cfg.trial_duration_max) * fs))
    stride_freq = rng.uniform(cfg.stride_freq_min, cfg.stride_freq_max)
    amplitude = cfg.stride_amplitude * amplitude_scale
    episodes = _episode_plan(cfg, num_samples, rng)

    labels = np.full(num_samples, FG, dtype=np.int64)
    tremble = np.zeros(num_samples)
    for start, end, style in episodes:
        labels[start:end] = FOG
        if style == STYLE_TREMBLING:
            freq = rng.uniform(cfg.tremble_freq_min, cfg.tremble_freq_max)
            local = np.arange(end - start) / fs
            tremble[start:end] = (
                cfg.tremble_amplitude_ratio * amplitude * np.sin(2.0 * np.pi * freq * local)
            )

    walking = (labels == FG).astype(np.float64)
    # stride phase and progression are held while frozen
    phase = np.cumsum(walking) * (2.0 * np.pi * stride_freq / fs)
    progression = np.cumsum(walking) * cfg.walking_speed

    positions = np.empty((len(DEFAULT_MARKERS), num_samples, 3))
    for n, name in enumerate(DEFAULT_MARKERS):
        forward, lateral, vertical = MARKER_LAYOUT[name]
        track = np.empty((num_samples, 3))
        track[:, 0] = forward + progression
        track[:, 1] = lateral
        track[:, 2] = vertical
        gain = SWING_GAIN.get(name[1:])
        if gain is None:
            track[:, 2] += PELVIS_BOUNCE * np.sin(2.0 * phase)
        else:
            side = 0.0 if name.startswith("L") else np.pi
            swing = np.sin(phase + side)
            track[:, 0] += gain * amplitude * swing
            track[:, 2] += gain * LIFT_RATIO * amplitude * np.maximum(swing, 0.0)
            track[:, 0] += gain * tremble * (1.0 if side == 0.0 else -1.0)
        positions[n] = track
    positions += rng.normal(0.0, cfg.noise, size=positions.shape) if cfg.noise > 0 else 0.0

    return Trial(
        trial_id=trial_id(subject, trial),
        subject_id=subject_id(subject),
        markers=DEFAULT_MARKERS,
        positions=positions,
        labels=labels,
        sample_rate=fs,
    )


def generate_synthetic(cfg: SynthConfig) -> List[Trial]:
    """
    Generate ``subjects x trials_per_subject`` trials.

    Each trial draws from its own child of ``SeedSequence(cfg.seed)`` so the
    output depends only on the seed and the trial's position.

    Raises:
        SynthesisError: If sampled episodes cannot be packed into a trial
    """
    root = np.random.SeedSequence(cfg.seed)
    subject_seeds = root.spawn(cfg.subjects)
    trials = []
    for s, subject_seed in enumerate(subject_seeds):
        subject_rng = np.random.default_rng(subject_seed)
        scale = subject_rng.uniform(0.85, 1.15)
        for t, trial_seed in enumerate(subject_seed.spawn(cfg.trials_per_subject)):
            trials.append(
                synthesize_trial(cfg, s, t, np.random.default_rng(trial_seed), scale)
            )
    fog = sum(1 for trial in trials if trial.has_fog)
    logger.info(f"Generated {len(trials)} synthetic trials ({fog} with FOG), seed {cfg.seed}")
    return trials
