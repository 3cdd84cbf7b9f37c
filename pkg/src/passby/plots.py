"""Deterministic SVG renderings of run artifacts (no timestamps, fixed geometry)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

WIDTH = 720
HEIGHT = 440
MARGIN = 54

# fixed cluster palette; cycles if a run ever exceeds it
PALETTE = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
    "#bbbbbb",
    "#222222",
)


def _svg(body: str, width: int = WIDTH, height: int = HEIGHT) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f"{body}</svg>\n"
    )


def _axes(x_label: str, y_label: str) -> str:
    x0, y0 = MARGIN, HEIGHT - MARGIN
    x1, y1 = WIDTH - MARGIN, MARGIN
    return (
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>\n'
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>\n'
        f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 14}" font-size="13" text-anchor="middle">{x_label}</text>\n'
        f'<text x="16" y="{(y0 + y1) // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) // 2})">{y_label}</text>\n'
    )


def _scale(values: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    span = hi - lo if hi > lo else 1.0
    return out_lo + (values - lo) / span * (out_hi - out_lo)


def spectrum_svg(eigenvalues: np.ndarray) -> str:
    """Eigenvalues against their index, one circle marker each."""
    vals = np.asarray(eigenvalues, dtype=np.float64)
    idx = np.arange(1, vals.size + 1)
    lo, hi = float(min(0.0, vals.min())), float(vals.max())
    xs = _scale(idx.astype(float), 1.0, float(max(2, vals.size)), MARGIN + 10, WIDTH - MARGIN - 10)
    ys = _scale(vals, lo, hi, HEIGHT - MARGIN - 10, MARGIN + 10)
    body = _axes("eigenvalue index", "eigenvalue")
    for x, y in zip(xs, ys):
        body += f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#4477aa"/>\n'
    return _svg(body)


def embedding_svg(matrix: np.ndarray) -> str:
    """One polyline per embedding column, drawn over the window index."""
    M = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n, p = M.shape
    lo, hi = float(M.min()), float(M.max())
    xs = _scale(np.arange(n, dtype=float), 0.0, float(max(1, n - 1)), MARGIN + 6, WIDTH - MARGIN - 6)
    body = _axes("window index", "coordinate")
    for j in range(p):
        ys = _scale(M[:, j], lo, hi, HEIGHT - MARGIN - 10, MARGIN + 10)
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        color = PALETTE[j % len(PALETTE)]
        body += f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>\n'
    return _svg(body)


def heatmap_svg(weights: np.ndarray) -> str:
    """Grayscale matrix picture: value 1 paints white, value 0 paints black."""
    W = np.asarray(weights, dtype=np.float64)
    n = W.shape[0]
    side = WIDTH - 2 * MARGIN
    cell = side / n
    grey = np.clip(np.rint(W * 255.0), 0, 255).astype(int)
    body = ""
    for i in range(n):
        j = 0
        while j < n:
            g = grey[i, j]
            j2 = j
            while j2 + 1 < n and grey[i, j2 + 1] == g:
                j2 += 1
            x = MARGIN + j * cell
            y = MARGIN + i * cell
            w = (j2 - j + 1) * cell
            body += (
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{w + 0.35:.2f}" height="{cell + 0.35:.2f}" '
                f'fill="rgb({g},{g},{g})"/>\n'
            )
            j = j2 + 1
    return _svg(body, width=WIDTH, height=side + 2 * MARGIN)


def timeline_svg(clusters: np.ndarray, truth: list[str]) -> str:
    """Two bands over the window index: true classes on top, clusters below."""
    labels = np.asarray(clusters, dtype=np.int64)
    n = labels.size
    names: list[str] = []
    for name in truth:
        if name not in names:
            names.append(name)
    xs = _scale(np.arange(n + 1, dtype=float), 0.0, float(n), MARGIN, WIDTH - MARGIN)
    body = _axes("window index", "")
    body += f'<text x="{MARGIN}" y="{MARGIN - 10}" font-size="13">top: true class, bottom: cluster</text>\n'
    band_h = (HEIGHT - 2 * MARGIN - 30) / 2
    for i in range(n):
        w = xs[i + 1] - xs[i]
        ct = PALETTE[names.index(truth[i]) % len(PALETTE)]
        body += (
            f'<rect x="{xs[i]:.2f}" y="{MARGIN:.2f}" width="{w + 0.2:.2f}" '
            f'height="{band_h:.2f}" fill="{ct}"/>\n'
        )
        cc = PALETTE[int(labels[i]) % len(PALETTE)]
        body += (
            f'<rect x="{xs[i]:.2f}" y="{MARGIN + band_h + 30:.2f}" width="{w + 0.2:.2f}" '
            f'height="{band_h:.2f}" fill="{cc}"/>\n'
        )
    return _svg(body)


def waveform_svg(samples: np.ndarray, sample_rate: int, columns: int = 600) -> str:
    """Min/max envelope of the signal as one filled polygon."""
    x = np.asarray(samples, dtype=np.float64)
    edges = np.linspace(0, x.size, columns + 1).astype(int)
    highs = np.array([x[a:b].max() if b > a else 0.0 for a, b in zip(edges[:-1], edges[1:])])
    lows = np.array([x[a:b].min() if b > a else 0.0 for a, b in zip(edges[:-1], edges[1:])])
    peak = float(max(abs(highs).max(), abs(lows).max(), 1e-12))
    xs = _scale(np.arange(columns, dtype=float), 0.0, float(columns - 1), MARGIN, WIDTH - MARGIN)
    mid = HEIGHT / 2
    half = (HEIGHT - 2 * MARGIN) / 2
    upper = mid - highs / peak * half
    lower = mid - lows / peak * half
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, upper))
    pts += " " + " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs[::-1], lower[::-1]))
    body = _axes("time", "amplitude")
    body += f'<polygon points="{pts}" fill="#4477aa" stroke="none"/>\n'
    return _svg(body)


def emit_plots(out_dir: str | Path) -> list[Path]:
    """Render SVGs from the CSV artifacts already written under out_dir.

    Needs spectrum.csv, embedding.csv, labels.csv, and graph.csv/graph.json;
    a missing artifact raises FileNotFoundError.
    """
    out = Path(out_dir)
    plots_dir = out / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []

    spectrum_path = out / "spectrum.csv"
    if not spectrum_path.exists():
        raise FileNotFoundError(f"missing artifact: {spectrum_path}")
    with open(spectrum_path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    vals = np.array([float(r[1]) for r in rows])
    target = plots_dir / "spectrum.svg"
    target.write_text(spectrum_svg(vals))
    written.append(target)

    embedding_path = out / "embedding.csv"
    if not embedding_path.exists():
        raise FileNotFoundError(f"missing artifact: {embedding_path}")
    with open(embedding_path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    M = np.array([[float(v) for v in r[1:]] for r in rows])
    target = plots_dir / "embedding.svg"
    target.write_text(embedding_svg(M))
    written.append(target)

    labels_path = out / "labels.csv"
    if not labels_path.exists():
        raise FileNotFoundError(f"missing artifact: {labels_path}")
    with open(labels_path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    clusters = np.array([int(r[2]) for r in rows])
    truth = [r[3] for r in rows]
    target = plots_dir / "clusters.svg"
    target.write_text(timeline_svg(clusters, truth))
    written.append(target)

    graph_csv = out / "graph.csv"
    graph_meta = out / "graph.json"
    if not graph_csv.exists() or not graph_meta.exists():
        raise FileNotFoundError(f"missing artifact: {graph_csv} / {graph_meta}")
    with open(graph_meta) as fh:
        n = int(json.load(fh)["n"])
    W = np.zeros((n, n))
    with open(graph_csv, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    for i_s, j_s, w_s in rows:
        W[int(i_s), int(j_s)] = float(w_s)
        W[int(j_s), int(i_s)] = float(w_s)
    target = plots_dir / "similarity.svg"
    target.write_text(heatmap_svg(W))
    written.append(target)
    return written
