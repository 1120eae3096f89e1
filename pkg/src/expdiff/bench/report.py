"""Metrics CSV/JSON and a self-contained SVG plot of per-dimension credible intervals."""

from __future__ import annotations

import csv
import json
from xml.sax.saxutils import escape

import numpy as np

from ..errors import ConfigError
from .metrics import MetricsReport

WIDTH, HEIGHT = 900, 420
MARGIN = dict(left=60, right=150, top=30, bottom=45)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def write_metrics_csv(metrics: MetricsReport, path):
    per = metrics.per_dim
    cols = list(per)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(metrics.d):
            w.writerow([int(per[c][i]) if c == "dim" else f"{float(per[c][i]):.17g}" for c in cols])


def write_metrics_json(metrics: MetricsReport, path):
    with open(path, "w") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _intervals(metrics):
    per = metrics.per_dim
    out = [("diffusion", per["theta_q025"], per["theta_median"], per["theta_q975"])]
    if "mcmc_theta_median" in per:
        out.append(("MCMC", per["mcmc_theta_q025"], per["mcmc_theta_median"], per["mcmc_theta_q975"]))
    for name, m in metrics.methods.items():
        if m.get("n_samples"):
            out.append((name, np.asarray(m["theta_q025"]), np.asarray(m["theta_median"]), np.asarray(m["theta_q975"])))
    return out


def render_svg(metrics: MetricsReport, title="posterior medians and 95% intervals"):
    """Medians (dots) with 95% interval bars per method, truth as crosses."""
    if metrics.d == 0:
        raise ConfigError("cannot render a report without dimensions")
    series = _intervals(metrics)
    truth = np.asarray(metrics.per_dim["theta_true"], dtype=float)
    values = np.concatenate([truth] + [np.concatenate([lo, hi]) for _, lo, _, hi in series])
    values = values[np.isfinite(values)]
    lo_v, hi_v = float(values.min()), float(values.max())
    if hi_v == lo_v:
        lo_v, hi_v = lo_v - 1.0, hi_v + 1.0
    pad = 0.05 * (hi_v - lo_v)
    lo_v, hi_v = lo_v - pad, hi_v + pad
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    d = metrics.d
    step = (x1 - x0) / d

    def sx(j, k):
        return x0 + step * (j + 0.5) + (k - (len(series) - 1) / 2) * min(step / (len(series) + 1), 6)

    def sy(v):
        return y1 - (v - lo_v) / (hi_v - lo_v) * (y1 - y0)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for tick in np.linspace(lo_v, hi_v, 5):
        y = sy(tick)
        parts.append(f'<line x1="{x0 - 4}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:.3g}</text>')
    for j in range(0, d, max(1, d // 15)):
        parts.append(f'<text x="{x0 + step * (j + 0.5):.2f}" y="{y1 + 15}" text-anchor="middle">{j}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">dimension</text>')
    parts.append(f'<text x="14" y="{(y0 + y1) / 2:.1f}" transform="rotate(-90 14 {(y0 + y1) / 2:.1f})" '
                 f'text-anchor="middle">theta</text>')
    for k, (name, lo, med, hi) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        parts.append(f'<g fill="{color}" stroke="{color}">')
        for j in range(d):
            if not all(np.isfinite(v) for v in (lo[j], med[j], hi[j])):
                continue
            x = sx(j, k)
            parts.append(f'<line x1="{x:.2f}" y1="{sy(lo[j]):.2f}" x2="{x:.2f}" y2="{sy(hi[j]):.2f}"/>')
            parts.append(f'<circle cx="{x:.2f}" cy="{sy(med[j]):.2f}" r="2.5"/>')
        parts.append("</g>")
        ly = y0 + 16 * k
        parts.append(f'<circle cx="{x1 + 20}" cy="{ly:.1f}" r="4" fill="{color}"/>')
        parts.append(f'<text x="{x1 + 30}" y="{ly + 4:.1f}">{escape(name)}</text>')
    parts.append('<g stroke="black" stroke-width="1.2">')
    for j in range(d):
        x, y = x0 + step * (j + 0.5), sy(truth[j])
        parts.append(f'<line x1="{x - 4:.2f}" y1="{y - 4:.2f}" x2="{x + 4:.2f}" y2="{y + 4:.2f}"/>')
        parts.append(f'<line x1="{x - 4:.2f}" y1="{y + 4:.2f}" x2="{x + 4:.2f}" y2="{y - 4:.2f}"/>')
    parts.append("</g>")
    ly = y0 + 16 * len(series)
    parts.append(f'<text x="{x1 + 16}" y="{ly + 4:.1f}">x</text><text x="{x1 + 30}" y="{ly + 4:.1f}">truth</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report(metrics: MetricsReport, csv_path, svg_path, json_path=None):
    """Write the metrics table, the SVG figure and optionally a JSON summary."""
    if metrics is None or metrics.d == 0:
        raise ConfigError("refusing to write a report for empty metrics")
    svg = render_svg(metrics)
    write_metrics_csv(metrics, csv_path)
    with open(svg_path, "w") as fh:
        fh.write(svg)
    if json_path is not None:
        write_metrics_json(metrics, json_path)


def load_metrics_json(path) -> MetricsReport:
    with open(path) as fh:
        raw = json.load(fh)
    per = {k: np.asarray(v) for k, v in raw["per_dim"].items()}
    return MetricsReport(per, raw["summary"], raw.get("methods", {}), raw.get("seeds", {}))
