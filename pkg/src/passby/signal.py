"""Audio ingestion, composite assembly, and short-time spectral features."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
from scipy.io import wavfile


class AudioIOError(Exception):
    """A file could not be read as audio at all."""


class UnsupportedEncodingError(AudioIOError):
    """WAV encoding outside PCM 8/16/24/32-bit integer or 32-bit float."""


class EmptyAudioError(AudioIOError):
    """A decoded file carried zero samples."""


class ManifestError(ValueError):
    """A composite manifest is malformed or inconsistent with its audio."""


@dataclass(frozen=True)
class AudioSignal:
    """Mono audio: float64 samples plus the sample rate that produced them."""

    samples: npt.NDArray[np.float64]
    sample_rate: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.samples.size == 0:
            raise EmptyAudioError("audio contains no samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class WindowingConfig:
    """How a signal is chopped into fixed-length analysis windows.

    `overlap` is a fraction of the window length and must land on a whole
    number of samples.  `smoothing_len` (odd, optional) switches on a moving
    mean over each window's coefficient row; edges use truncated averages.
    """

    window_len: int = 6000
    overlap: float = 0.0
    taper: str = "box"
    smoothing_len: int | None = None

    def __post_init__(self) -> None:
        if self.window_len < 2:
            raise ValueError("window_len must be at least 2")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")
        step = self.window_len * (1.0 - self.overlap)
        if abs(step - round(step)) > 1e-9 or round(step) < 1:
            raise ValueError("overlap must leave a whole positive number of samples between window starts")
        if self.taper not in ("box", "hamming"):
            raise ValueError(f"unknown taper {self.taper!r}; expected 'box' or 'hamming'")
        if self.smoothing_len is not None:
            if self.smoothing_len < 1 or self.smoothing_len % 2 == 0:
                raise ValueError("smoothing_len must be an odd positive integer")

    @property
    def hop(self) -> int:
        """Samples between consecutive window starts."""
        return round(self.window_len * (1.0 - self.overlap))


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-window magnitudes of DFT bins 1..m (bin 0 excluded), row per window."""

    values: npt.NDArray[np.float64]
    start_times: npt.NDArray[np.float64]
    window_len: int
    sample_rate: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "start_times", np.asarray(self.start_times, dtype=np.float64))
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if self.start_times.shape != (self.values.shape[0],):
            raise ValueError("start_times must hold one entry per window")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("feature values must be finite and nonnegative")

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]

    @property
    def n_coefficients(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ManifestEntry:
    """One clip reference: file, class label, and the crop to take from it."""

    path: str
    label: str
    start_s: float
    duration_s: float


@dataclass(frozen=True)
class LabelSpan:
    """Half-open interval [start_s, end_s) of composite time carrying one label."""

    label: str
    start_s: float
    end_s: float


def load_audio(path: str | Path) -> AudioSignal:
    """Decode a WAV file to mono float64.

    Integer PCM is scaled by 1/2^(bits-1); two channels are averaged to one.
    Unreadable files, unsupported encodings, and zero-length audio raise
    distinct exception types.
    """
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError as exc:
        raise AudioIOError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise UnsupportedEncodingError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise AudioIOError(f"cannot read {path}: {exc}") from exc
    if data.size == 0:
        raise EmptyAudioError(f"{path}: file contains no samples")
    if data.ndim == 2:
        if data.shape[1] > 2:
            raise UnsupportedEncodingError(f"{path}: {data.shape[1]} channels; expected 1 or 2")
        x = data.astype(np.float64).mean(axis=1)
    else:
        x = data.astype(np.float64)
    if data.dtype == np.uint8:
        x = (x - 128.0) / 128.0
    elif data.dtype == np.int16:
        x = x / 2.0**15
    elif data.dtype == np.int32:
        # 24-bit PCM arrives widened into the top bytes of int32, so one
        # scale realizes v/2^23 for 24-bit data and v/2^31 for true 32-bit.
        x = x / 2.0**31
    elif data.dtype == np.float32:
        pass
    else:
        raise UnsupportedEncodingError(f"{path}: sample format {data.dtype} not supported")
    return AudioSignal(samples=x, sample_rate=int(rate))


def write_wav(signal: AudioSignal, path: str | Path, encoding: str = "float32") -> None:
    """Encode mono audio to WAV. float32 round-trips exactly; pcm16 quantizes."""
    if encoding == "float32":
        wavfile.write(str(path), signal.sample_rate, signal.samples.astype(np.float32))
    elif encoding == "pcm16":
        q = np.clip(np.round(signal.samples * 2.0**15), -(2.0**15), 2.0**15 - 1)
        wavfile.write(str(path), signal.sample_rate, q.astype(np.int16))
    else:
        raise ValueError(f"unknown encoding {encoding!r}; expected 'float32' or 'pcm16'")


MANIFEST_FIELDS = ("path", "label", "start_s", "duration_s")


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a clip manifest CSV with header path,label,start_s,duration_s."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
                raise ManifestError(
                    f"{path}: manifest header must be {','.join(MANIFEST_FIELDS)}"
                )
            entries = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    entries.append(
                        ManifestEntry(
                            path=row["path"],
                            label=row["label"],
                            start_s=float(row["start_s"]),
                            duration_s=float(row["duration_s"]),
                        )
                    )
                except (TypeError, ValueError) as exc:
                    raise ManifestError(f"{path}:{lineno}: bad row: {exc}") from exc
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not entries:
        raise ManifestError(f"{path}: manifest lists no clips")
    return entries


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.path, e.label, repr(float(e.start_s)), repr(float(e.duration_s))])


def assemble_composite(
    entries: list[ManifestEntry], base_dir: str | Path | None = None
) -> tuple[AudioSignal, list[LabelSpan]]:
    """Concatenate manifest crops into one signal plus its label spans.

    Relative clip paths resolve against `base_dir`.  All clips must share one
    sample rate and every crop must lie inside its file.
    """
    if not entries:
        raise ManifestError("manifest lists no clips")
    base = Path(base_dir) if base_dir is not None else Path(".")
    pieces: list[np.ndarray] = []
    spans: list[LabelSpan] = []
    rate: int | None = None
    offset = 0
    for e in entries:
        clip_path = Path(e.path)
        if not clip_path.is_absolute():
            clip_path = base / clip_path
        clip = load_audio(clip_path)
        if rate is None:
            rate = clip.sample_rate
        elif clip.sample_rate != rate:
            raise ManifestError(
                f"{e.path}: sample rate {clip.sample_rate} != {rate} of the first clip"
            )
        start = int(round(e.start_s * rate))
        length = int(round(e.duration_s * rate))
        if length < 1:
            raise ManifestError(f"{e.path}: crop duration {e.duration_s} leaves no samples")
        if start < 0 or start + length > clip.samples.size:
            raise ManifestError(
                f"{e.path}: crop [{e.start_s}s, +{e.duration_s}s) falls outside the file"
            )
        pieces.append(clip.samples[start : start + length])
        spans.append(LabelSpan(e.label, offset / rate, (offset + length) / rate))
        offset += length
    assert rate is not None
    return AudioSignal(samples=np.concatenate(pieces), sample_rate=rate), spans


def _moving_mean(rows: np.ndarray, width: int) -> np.ndarray:
    """Row-wise centered moving mean; edge positions average the in-range part only."""
    kernel = np.ones(width)
    counts = np.convolve(np.ones(rows.shape[1]), kernel, mode="same")
    sums = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), 1, rows)
    return sums / counts


def stft_features(
    signal: AudioSignal, cfg: WindowingConfig = WindowingConfig(), m: int = 1500
) -> FeatureMatrix:
    """Magnitudes of DFT bins 1..m for each analysis window.

    Uses the unnormalized forward transform.  The DC bin is dropped and a
    trailing partial window is discarded.
    """
    if m < 1 or m > cfg.window_len // 2:
        raise ValueError(f"m must lie in [1, {cfg.window_len // 2}], got {m}")
    x = signal.samples
    if x.size < cfg.window_len:
        raise ValueError(
            f"signal has {x.size} samples; at least one window of {cfg.window_len} required"
        )
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.window_len)[:: cfg.hop]
    if cfg.taper == "hamming":
        frames = frames * np.hamming(cfg.window_len)
    mags = np.abs(np.fft.rfft(frames, axis=1))[:, 1 : m + 1]
    if cfg.smoothing_len is not None:
        mags = _moving_mean(mags, cfg.smoothing_len)
    starts = cfg.hop * np.arange(frames.shape[0]) / signal.sample_rate
    return FeatureMatrix(
        values=mags,
        start_times=starts,
        window_len=cfg.window_len,
        sample_rate=signal.sample_rate,
    )


def write_features_csv(features: FeatureMatrix, csv_path: str | Path, meta_path: str | Path) -> None:
    """One CSV row per window plus a JSON sidecar with the geometry."""
    import json

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in features.values:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "n_windows": features.n_windows,
        "n_coefficients": features.n_coefficients,
        "window_len": features.window_len,
        "sample_rate": features.sample_rate,
        "start_times": [float(t) for t in features.start_times],
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_features_csv(csv_path: str | Path, meta_path: str | Path) -> FeatureMatrix:
    import json

    with open(meta_path) as fh:
        meta = json.load(fh)
    values = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    return FeatureMatrix(
        values=values,
        start_times=np.asarray(meta["start_times"], dtype=np.float64),
        window_len=int(meta["window_len"]),
        sample_rate=int(meta["sample_rate"]),
    )
