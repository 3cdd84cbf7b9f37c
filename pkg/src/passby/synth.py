"""Synthetic inputs: noisy block similarity matrices and vehicle-like audio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .graph import SimilarityGraph
from .signal import AudioSignal, LabelSpan


@dataclass(frozen=True)
class BlockSpec:
    """A planted-partition similarity matrix with a two-level hierarchy.

    `hierarchy` groups fine-block indices into coarse blocks.  Entries are
    `in_block` within a fine block, the midpoint of the two levels between
    sibling fine blocks of one coarse block, and `cross_block` elsewhere.
    `noise_fraction` of the off-diagonal pairs are snapped (symmetrically) to
    one of the two extreme levels at random.
    """

    block_sizes: tuple[int, ...] = (40, 30, 30)
    hierarchy: tuple[tuple[int, ...], ...] = ((0,), (1, 2))
    in_block: float = 0.9
    cross_block: float = 0.05
    noise_fraction: float = 0.05
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValueError("block_sizes must be positive")
        listed = sorted(b for group in self.hierarchy for b in group)
        if listed != list(range(len(self.block_sizes))):
            raise ValueError("hierarchy must partition the block indices")
        if not 0.0 < self.in_block <= 1.0:
            raise ValueError("in_block must lie in (0, 1]")
        if not 0.0 <= self.cross_block < self.in_block:
            raise ValueError("cross_block must lie in [0, in_block)")
        if not 0.0 <= self.noise_fraction < 0.5:
            raise ValueError("noise_fraction must lie in [0, 0.5)")

    @property
    def n_points(self) -> int:
        return sum(self.block_sizes)


def gen_block_similarity(
    spec: BlockSpec = BlockSpec(),
) -> tuple[SimilarityGraph, npt.NDArray[np.int64], npt.NDArray[np.int64]]:
    """Noisy hierarchical block matrix as a graph, plus fine and coarse truths."""
    sizes = spec.block_sizes
    n = spec.n_points
    fine = np.repeat(np.arange(len(sizes)), sizes)
    group_of = {b: g for g, group in enumerate(spec.hierarchy) for b in group}
    coarse = np.array([group_of[int(b)] for b in fine], dtype=np.int64)
    sibling_level = 0.5 * (spec.in_block + spec.cross_block)
    S = np.full((n, n), spec.cross_block)
    S[coarse[:, None] == coarse[None, :]] = sibling_level
    S[fine[:, None] == fine[None, :]] = spec.in_block
    rng = np.random.default_rng(np.random.SeedSequence(spec.rng_seed))
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(iu.size) < spec.noise_fraction
    snapped = np.where(rng.random(iu.size) < 0.5, spec.in_block, spec.cross_block)
    upper = np.where(hit, snapped, S[iu, ju])
    S[iu, ju] = upper
    S[ju, iu] = upper
    np.fill_diagonal(S, 0.0)
    graph = SimilarityGraph(weights=S, scales=np.ones(n), neighbors=n - 1)
    return graph, fine, coarse


@dataclass(frozen=True)
class PassageEnvelope:
    """Rise/fall of a pass-by over one clip: level at the edges, 1.0 mid-clip."""

    edge_level: float = 0.35
    power: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.edge_level <= 1.0:
            raise ValueError("edge_level must lie in [0, 1]")
        if self.power <= 0.0:
            raise ValueError("power must be positive")

    def at(self, t: npt.NDArray[np.float64], clip_s: float) -> npt.NDArray[np.float64]:
        bump = np.sin(np.pi * t / clip_s) ** (2.0 * self.power)
        return self.edge_level + (1.0 - self.edge_level) * bump


@dataclass(frozen=True)
class VehicleSpec:
    """One vehicle's acoustic signature: a harmonic stack over broadband noise."""

    name: str
    fundamental_hz: float
    harmonic_amps: tuple[float, ...]
    broadband_level: float = 0.06
    envelope: PassageEnvelope = field(default_factory=PassageEnvelope)
    amp_jitter: float = 0.05  # per-clip relative wobble of each harmonic
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.fundamental_hz <= 0.0:
            raise ValueError("fundamental_hz must be positive")
        if not self.harmonic_amps or any(a < 0 for a in self.harmonic_amps):
            raise ValueError("harmonic_amps must be nonempty and nonnegative")
        if max(self.harmonic_amps) == 0.0:
            raise ValueError("at least one harmonic must be audible")
        if self.broadband_level < 0.0 or self.amp_jitter < 0.0:
            raise ValueError("broadband_level and amp_jitter must be nonnegative")


def _scaled(amps: tuple[float, ...], total: float) -> tuple[float, ...]:
    s = sum(amps)
    return tuple(a * total / s for a in amps)


def default_vehicle_bank() -> tuple[VehicleSpec, ...]:
    """Three well-separated vehicles (fundamentals 30 / 45 / 70 Hz)."""
    return (
        VehicleSpec(
            name="truck",
            fundamental_hz=30.0,
            harmonic_amps=_scaled((1.0, 0.62, 0.81, 0.42, 0.55, 0.30, 0.35, 0.18, 0.20, 0.10), 0.75),
        ),
        VehicleSpec(
            name="sedan",
            fundamental_hz=45.0,
            harmonic_amps=_scaled((0.70, 1.0, 0.45, 0.65, 0.28, 0.40, 0.18, 0.22), 0.75),
        ),
        VehicleSpec(
            name="van",
            fundamental_hz=70.0,
            harmonic_amps=_scaled((1.0, 0.42, 0.78, 0.50, 0.30, 0.36, 0.16), 0.75),
        ),
    )


def gen_vehicle_audio(
    specs: tuple[VehicleSpec, ...],
    passages: tuple[int, ...] | None = None,
    *,
    sample_rate: int = 48000,
    clip_s: float = 2.0,
    rng_seed: int = 0,
) -> tuple[AudioSignal, list[LabelSpan]]:
    """Concatenated pass-by clips plus their true label spans.

    `passages` lists which vehicle drives by in each clip; the default cycles
    through all vehicles three times.  Fundamentals of distinct vehicles must
    differ by at least 15%.  Harmonics are enveloped per clip; broadband noise
    stays constant, so clip edges carry the weakest signatures.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("at least one vehicle is required")
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            fi, fj = specs[i].fundamental_hz, specs[j].fundamental_hz
            if abs(fi - fj) / min(fi, fj) < 0.15:
                raise ValueError(
                    f"fundamentals of {specs[i].name!r} and {specs[j].name!r} differ by under 15%"
                )
    if passages is None:
        passages = tuple(range(len(specs))) * 3
    if not passages:
        raise ValueError("at least one passage is required")
    if any(not 0 <= v < len(specs) for v in passages):
        raise ValueError("passages must index into specs")
    n = int(round(clip_s * sample_rate))
    if n < 1:
        raise ValueError("clip_s leaves no samples")
    t = np.arange(n) / sample_rate
    clips = []
    spans = []
    for idx, v in enumerate(passages):
        spec = specs[v]
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(rng_seed, spec.rng_seed, idx))
        )
        x = np.zeros(n)
        for h, amp in enumerate(spec.harmonic_amps, start=1):
            wobble = 1.0 + spec.amp_jitter * rng.standard_normal()
            phase = rng.uniform(0.0, 2.0 * np.pi)
            x += amp * wobble * np.sin(2.0 * np.pi * spec.fundamental_hz * h * t + phase)
        x *= spec.envelope.at(t, clip_s)
        x += spec.broadband_level * rng.standard_normal(n)
        clips.append(x)
        spans.append(LabelSpan(spec.name, idx * clip_s, (idx + 1) * clip_s))
    return AudioSignal(samples=np.concatenate(clips), sample_rate=sample_rate), spans
