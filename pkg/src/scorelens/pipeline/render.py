"""Static SVG rendering of attribution plot-data documents.

Deterministic by construction: identical input documents produce identical
bytes. Summary documents become horizontal bar charts; decision documents
become a cumulative path from baseline to prediction.
"""

from __future__ import annotations

from ..errors import DataError

WIDTH = 640
ROW_H = 26
MARGIN = 60
BAR_LEFT = 220


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def render_svg(doc) -> str:
    kind = doc.get("kind")
    if kind == "summary":
        return _render_summary(doc)
    if kind == "decision":
        return _render_decision(doc)
    raise DataError(f"unknown plot-data kind {kind!r}")


def _header(height, title):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{height}" viewBox="0 0 {WIDTH} {height}" '
        f'font-family="monospace" font-size="12">\n'
        f'<text x="{MARGIN}" y="24" font-size="14">{_esc(title)}</text>\n'
    )


def _render_summary(doc):
    entries = doc.get("entries", [])
    height = MARGIN + ROW_H * max(len(entries), 1) + 20
    parts = [_header(height, "mean |SHAP| per feature")]
    top = MARGIN - 10
    parts.append(f'<line x1="{BAR_LEFT}" y1="{top}" x2="{BAR_LEFT}" '
                 f'y2="{height - 16}" stroke="black"/>\n')
    parts.append(f'<line x1="{BAR_LEFT}" y1="{height - 16}" '
                 f'x2="{WIDTH - 20}" y2="{height - 16}" stroke="black"/>\n')
    max_value = max((abs(e["shap"]) for e in entries), default=0.0)
    span = WIDTH - 40 - BAR_LEFT
    for i, entry in enumerate(entries):
        y = MARGIN + i * ROW_H
        length = 0.0 if max_value == 0 else abs(entry["shap"]) / max_value * span
        parts.append(
            f'<text x="{BAR_LEFT - 8}" y="{y + 14}" text-anchor="end">'
            f'{_esc(entry["feature"])}</text>\n')
        parts.append(
            f'<rect class="bar" x="{BAR_LEFT}" y="{y}" '
            f'width="{_fmt(length)}" height="{ROW_H - 8}" fill="#4878a8"/>\n')
        parts.append(
            f'<text x="{_fmt(BAR_LEFT + length + 6)}" y="{y + 14}">'
            f'{entry["shap"]:.4f}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def _render_decision(doc):
    entries = doc.get("entries", [])
    baseline = doc.get("baseline") or 0.0
    path_values = [baseline] + [e["cumulative"] for e in entries]
    height = MARGIN + ROW_H * max(len(entries) + 1, 2) + 20
    title = f'decision path, instance {doc.get("instance_id", "?")}'
    parts = [_header(height, title)]
    lo = min(path_values)
    hi = max(path_values)
    span = hi - lo if hi > lo else 1.0

    def x_of(value):
        return BAR_LEFT + (value - lo) / span * (WIDTH - 40 - BAR_LEFT)

    parts.append(f'<line x1="{BAR_LEFT}" y1="{MARGIN - 10}" x2="{BAR_LEFT}" '
                 f'y2="{height - 16}" stroke="#cccccc"/>\n')
    points = []
    for i, value in enumerate(path_values):
        points.append(f"{_fmt(x_of(value))},{MARGIN + i * ROW_H}")
    parts.append(f'<polyline points="{" ".join(points)}" fill="none" '
                 f'stroke="#b04030" stroke-width="2"/>\n')
    parts.append(f'<text x="{_fmt(x_of(baseline) + 6)}" y="{MARGIN - 16}">'
                 f'baseline {baseline:.4f}</text>\n')
    for i, entry in enumerate(entries):
        y = MARGIN + (i + 1) * ROW_H
        label = f'{entry["feature"]}={entry["value"]}'
        parts.append(f'<circle cx="{_fmt(x_of(entry["cumulative"]))}" '
                     f'cy="{y}" r="3" fill="#b04030"/>\n')
        parts.append(f'<text x="{BAR_LEFT - 8}" y="{y + 4}" '
                     f'text-anchor="end">{_esc(label)}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)
