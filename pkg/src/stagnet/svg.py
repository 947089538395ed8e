"""Dependency-free scatter plot with an optional fitted line."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .metrics import FitResult

WIDTH, HEIGHT = 560, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 24, 48, 64


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _range(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _n(v: float) -> str:
    return f"{v:.2f}"


def render_scatter_svg(
    points: Sequence[tuple[float, float]],
    fit: FitResult | None = None,
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "y",
) -> str:
    if not points:
        raise ValueError("need at least one point")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = _range(xs)
    fit_ys = [fit.slope * x + fit.intercept for x in (min(xs), max(xs))] if fit is not None and len(points) > 1 else []
    y0, y1 = _range(ys + fit_ys)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{_escape(title)}</text>',
        f'<line class="axis" x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for t in range(5):
        xv = x0 + (x1 - x0) * t / 4
        yv = y0 + (y1 - y0) * t / 4
        out.append(
            f'<text x="{_n(sx(xv))}" y="{TOP + ph + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">{xv:.4g}</text>'
        )
        out.append(
            f'<text x="{LEFT - 6}" y="{_n(sy(yv) + 3)}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{yv:.4g}</text>'
        )
    out.append(
        f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{_escape(ylabel)}</text>'
    )
    for x, y in points:
        out.append(f'<circle class="point" cx="{_n(sx(x))}" cy="{_n(sy(y))}" r="3.5" fill="#1f77b4"/>')
    if fit_ys:
        xa, xb = min(xs), max(xs)
        out.append(
            f'<line class="fit" x1="{_n(sx(xa))}" y1="{_n(sy(fit_ys[0]))}" x2="{_n(sx(xb))}" '
            f'y2="{_n(sy(fit_ys[1]))}" stroke="#d62728" stroke-width="2"/>'
        )
        out.append(
            f'<text class="caption" x="{LEFT + pw - 4}" y="{TOP + 14}" text-anchor="end" font-family="sans-serif" '
            f'font-size="12">R-squared: {fit.r_squared:.3f}  slope: {fit.slope:.4g}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter_svg(
    points: Sequence[tuple[float, float]],
    fit: FitResult | None,
    path: str | Path,
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "y",
) -> Path:
    path = Path(path)
    path.write_text(render_scatter_svg(points, fit, title, xlabel, ylabel))
    return path
