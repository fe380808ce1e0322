"""Minimal deterministic SVG line plots (no plotting dependency)."""

from __future__ import annotations

from typing import Optional, Sequence

_WIDTH, _HEIGHT = 800, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 50

_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot_svg(
    series: Sequence[dict],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    hline: Optional[float] = None,
) -> str:
    """Render polylines into a fixed-viewport SVG document.

    Each series is a dict with keys 'x' and 'y' (equal-length sequences) and
    an optional 'label'.  Output is a pure function of the inputs.
    """
    xs = [v for s in series for v in s["x"]]
    ys = [v for s in series for v in s["y"]]
    if hline is not None:
        ys.append(hline)
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH // 2}" y="25" text-anchor="middle" '
            f'font-size="16">{title}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
            f'font-size="13">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{_HEIGHT // 2}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 18 {_HEIGHT // 2})">{ylabel}</text>'
        )

    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        parts.append(
            f'<text x="{_fmt(px(fx))}" y="{_HEIGHT - _MARGIN_B + 18}" '
            f'text-anchor="middle" font-size="11">{_fmt(fx)}</text>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{_fmt(py(fy) + 4)}" '
            f'text-anchor="end" font-size="11">{_fmt(fy)}</text>'
        )

    if hline is not None:
        y = _fmt(py(hline))
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y}" x2="{_WIDTH - _MARGIN_R}" y2="{y}" '
            f'stroke="red" stroke-dasharray="6,4"/>'
        )

    for idx, s in enumerate(series):
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s["x"], s["y"]))
        color = _COLORS[idx % len(_COLORS)]
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>'
        )
        label = s.get("label")
        if label:
            parts.append(
                f'<text x="{_WIDTH - _MARGIN_R - 5}" '
                f'y="{_MARGIN_T + 16 + 14 * idx}" text-anchor="end" '
                f'font-size="11" fill="{color}">{label}</text>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
