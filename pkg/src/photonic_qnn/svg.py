"""Minimal SVG line plots: mean curves with a +-1 std band.

Output is a pure function of the inputs (fixed number formatting, no
timestamps), so regenerating a figure gives identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from html import escape
from math import log10

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 45


@dataclass
class Curve:
    label: str
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray | None = None


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    curves: list
    logx: bool = False
    hline: float | None = None


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = mag * min((1, 2, 5, 10), key=lambda s: abs(s * mag - raw))
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _panel_svg(panel: Panel, ox: float, oy: float) -> list[str]:
    tx = (lambda v: np.log10(v)) if panel.logx else (lambda v: np.asarray(v, dtype=float))
    xs = np.concatenate([tx(np.asarray(c.x, dtype=float)) for c in panel.curves])
    lows, highs = [], []
    for c in panel.curves:
        s = np.zeros_like(c.mean) if c.std is None else np.nan_to_num(c.std)
        lows.append(c.mean - s)
        highs.append(c.mean + s)
    ys = np.concatenate(lows + highs + ([np.array([panel.hline])] if panel.hline is not None else []))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B

    def px(v):
        return ox + MARGIN_L + (v - x0) / (x1 - x0) * w

    def py(v):
        return oy + MARGIN_T + (1.0 - (v - y0) / (y1 - y0)) * h

    out = [f'<rect x="{_fmt(ox + MARGIN_L)}" y="{_fmt(oy + MARGIN_T)}" width="{w}" height="{h}" fill="none" stroke="#444"/>']
    out.append(f'<text x="{_fmt(ox + PANEL_W / 2)}" y="{_fmt(oy + 18)}" text-anchor="middle" font-size="13">{escape(panel.title)}</text>')
    for t in _nice_ticks(y0, y1):
        if y0 <= t <= y1:
            out.append(f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(t))}" x2="{_fmt(px(x0) - 4)}" y2="{_fmt(py(t))}" stroke="#444"/>')
            out.append(f'<text x="{_fmt(px(x0) - 6)}" y="{_fmt(py(t) + 4)}" text-anchor="end" font-size="10">{_tick_label(t)}</text>')
    xticks = np.arange(np.ceil(x0), np.floor(x1) + 1) if panel.logx else _nice_ticks(x0, x1)
    for t in xticks:
        if x0 <= t <= x1:
            label = _tick_label(10**t) if panel.logx else _tick_label(t)
            out.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(py(y0))}" x2="{_fmt(px(t))}" y2="{_fmt(py(y0) + 4)}" stroke="#444"/>')
            out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(py(y0) + 16)}" text-anchor="middle" font-size="10">{label}</text>')
    out.append(f'<text x="{_fmt(ox + MARGIN_L + w / 2)}" y="{_fmt(oy + PANEL_H - 8)}" text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>')
    cy = oy + MARGIN_T + h / 2
    out.append(f'<text x="{_fmt(ox + 14)}" y="{_fmt(cy)}" text-anchor="middle" font-size="11" transform="rotate(-90 {_fmt(ox + 14)} {_fmt(cy)})">{escape(panel.ylabel)}</text>')
    if panel.hline is not None:
        out.append(f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(panel.hline))}" x2="{_fmt(px(x1))}" y2="{_fmt(py(panel.hline))}" stroke="#888" stroke-dasharray="5,4"/>')
    for i, c in enumerate(panel.curves):
        color = PALETTE[i % len(PALETTE)]
        x = tx(np.asarray(c.x, dtype=float))
        if c.std is not None:
            s = np.nan_to_num(np.asarray(c.std, dtype=float))
            upper = [f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, c.mean + s)]
            lower = [f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[::-1], (c.mean - s)[::-1])]
            out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, c.mean))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = oy + MARGIN_T + 14 + 14 * i
        lx = ox + PANEL_W - MARGIN_R - 110
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 18)}" y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_fmt(lx + 22)}" y="{_fmt(ly)}" font-size="10">{escape(c.label)}</text>')
    return out


def render(panels, path=None) -> str:
    """Lay ``panels`` out side by side and return (and optionally write) the SVG text."""
    width, height = PANEL_W * len(panels), PANEL_H
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for i, panel in enumerate(panels):
        parts.extend(_panel_svg(panel, i * PANEL_W, 0))
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
