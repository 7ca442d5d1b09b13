"""Self-contained SVG line charts of sweep aggregates.

One chart plots mean neuron growth (left scale) and mean error (right scale)
against a single sweep axis. Every plotted point carries its source values in
data-x / data-y attributes so emitted charts can be checked against the
aggregate CSV they came from. No external resources are referenced.
"""

WIDTH = 800
HEIGHT = 480
MARGIN_LEFT = 70
MARGIN_RIGHT = 70
MARGIN_TOP = 40
MARGIN_BOTTOM = 60

NG_COLOR = "#1f77b4"
E_COLOR = "#d62728"


def _spread(values):
    lo, hi = min(values), max(values)
    if hi == lo:  # degenerate span: center the points
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


class _Scale:
    def __init__(self, lo, hi, px0, px1):
        self.lo, self.hi, self.px0, self.px1 = lo, hi, px0, px1

    def __call__(self, v):
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px0 + frac * (self.px1 - self.px0)

    def ticks(self, n=5):
        step = (self.hi - self.lo) / (n - 1)
        return [self.lo + i * step for i in range(n)]


def _series(points, xs, ys, scale_x, scale_y, color, name):
    coords = " ".join(
        f"{scale_x(x):.2f},{scale_y(y):.2f}" for x, y in zip(xs, ys)
    )
    parts = [
        f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
    ]
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{scale_x(x):.2f}" cy="{scale_y(y):.2f}" r="3.5" '
            f'fill="{color}" data-series="{name}" data-x="{x!r}" data-y="{y!r}"/>'
        )
    return parts


def render_chart(rows, axis: str) -> str:
    """Render aggregate rows as SVG text.

    rows: list of dicts with keys axis ('alpha' or 'beta'), 'mean_NG',
    'mean_E'. Rows must be sorted by the axis value.
    """
    if not rows:
        raise ValueError("no rows to chart")
    xs = [r[axis] for r in rows]
    ng = [r["mean_NG"] for r in rows]
    e = [r["mean_E"] for r in rows]

    sx = _Scale(*_spread(xs), MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    sy_ng = _Scale(*_spread(ng), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)
    sy_e = _Scale(*_spread(e), HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="{NG_COLOR}"/>',
        f'<line x1="{x1}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="{E_COLOR}"/>',
    ]
    for tx in sx.ticks():
        px = sx(tx)
        parts.append(
            f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 20}" font-size="12" '
            f'text-anchor="middle">{tx:.4g}</text>'
        )
    for ty in sy_ng.ticks():
        py = sy_ng(ty)
        parts.append(
            f'<text x="{x0 - 8}" y="{py:.2f}" font-size="12" fill="{NG_COLOR}" '
            f'text-anchor="end" dominant-baseline="middle">{ty:.4g}</text>'
        )
    for ty in sy_e.ticks():
        py = sy_e(ty)
        parts.append(
            f'<text x="{x1 + 8}" y="{py:.2f}" font-size="12" fill="{E_COLOR}" '
            f'dominant-baseline="middle">{ty:.4g}</text>'
        )
    parts += _series(rows, xs, ng, sx, sy_ng, NG_COLOR, "ng")
    parts += _series(rows, xs, e, sx, sy_e, E_COLOR, "e")
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 15}" font-size="14" '
        f'text-anchor="middle">{axis}</text>'
    )
    parts.append(
        f'<text x="{x0}" y="{y1 - 12}" font-size="14" fill="{NG_COLOR}">mean NG</text>'
    )
    parts.append(
        f'<text x="{x1}" y="{y1 - 12}" font-size="14" fill="{E_COLOR}" '
        f'text-anchor="end">mean E</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
