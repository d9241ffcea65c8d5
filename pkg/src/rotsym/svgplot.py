"""Minimal SVG line/scatter charts with no display dependency.

Output is deterministic byte-for-byte for fixed input data, which keeps
experiment artifact directories reproducible.
"""

import math

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for m in (1, 2, 5, 10):
        if span / (step * m) <= n:
            step *= m
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(x):
    return f"{x:.6g}"


def plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write a line/scatter chart.

    series: list of dicts {x: seq, y: seq, label: str, marker: bool, line: bool}
    """
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if logy else (lambda v: v)
    xs = [tx(v) for s in series for v in s["x"]]
    ys = [ty(v) for s in series for v in s["y"]]
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    padx = 0.04 * (xhi - xlo)
    pady = 0.06 * (yhi - ylo)
    xlo, xhi = xlo - padx, xhi + padx
    ylo, yhi = ylo - pady, yhi + pady

    def X(v):
        return _ML + (tx(v) - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def Y(v):
        return _H - _MB - (ty(v) - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for t in _ticks(xlo, xhi):
        px = _ML + (t - xlo) / (xhi - xlo) * (_W - _ML - _MR)
        lab = _fmt(10 ** t) if logx else _fmt(t)
        out.append(
            f'<line x1="{px:.2f}" y1="{_MT}" x2="{px:.2f}" y2="{_H - _MB}" '
            f'stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{_H - _MB + 16}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{lab}</text>'
        )
    for t in _ticks(ylo, yhi):
        py = _H - _MB - (t - ylo) / (yhi - ylo) * (_H - _MT - _MB)
        lab = _fmt(10 ** t) if logy else _fmt(t)
        out.append(
            f'<line x1="{_ML}" y1="{py:.2f}" x2="{_W - _MR}" y2="{py:.2f}" '
            f'stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_ML - 6}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{lab}</text>'
        )
    out.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="#333333"/>'
    )
    out.append(
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{xlabel}</text>'
    )
    out.append(
        f'<text x="16" y="{_H // 2}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_H // 2})">{ylabel}</text>'
    )
    for i, s in enumerate(series):
        col = colors[i % len(colors)]
        pts = [(X(a), Y(b)) for a, b in zip(s["x"], s["y"])]
        if s.get("line", True) and len(pts) > 1:
            d = " ".join(f"{p[0]:.2f},{p[1]:.2f}" for p in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        if s.get("marker", True):
            for p in pts:
                out.append(f'<circle cx="{p[0]:.2f}" cy="{p[1]:.2f}" r="3" fill="{col}"/>')
        if s.get("label"):
            ly = _MT + 16 + 16 * i
            out.append(
                f'<rect x="{_W - _MR - 150}" y="{ly - 9}" width="10" height="10" fill="{col}"/>'
            )
            out.append(
                f'<text x="{_W - _MR - 136}" y="{ly}" font-size="11" '
                f'font-family="sans-serif">{s["label"]}</text>'
            )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
