"""Trajectory log export: CSV (fixed column contract), JSON and SVG.

CSV columns, in order::

    t,n,e,d,phi,theta,psi,V_T,A_T_d,P_d,Q_d,A_T,P,Q,h_p,h_1..h_N,h_mode,intervening

Floats are written with shortest round-trip ``repr``, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .constraints import GeofencePlane, MovingObstacle
from .scenario import Scenario
from .simulate import Metrics, TrajectoryLog


def csv_header(member_count: int) -> str:
    mems = ",".join(f"h_{i + 1}" for i in range(member_count))
    return f"t,n,e,d,phi,theta,psi,V_T,A_T_d,P_d,Q_d,A_T,P,Q,h_p,{mems},h_mode,intervening"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(log: TrajectoryLog, path: str | Path) -> Path:
    path = Path(path)
    lines = [csv_header(log.member_count)]
    for i in range(len(log.t)):
        vals = [
            _fmt(log.t[i]),
            *(_fmt(v) for v in log.x[i]),
            *(_fmt(v) for v in log.u_d[i]),
            *(_fmt(v) for v in log.u[i]),
            _fmt(log.h_p[i]),
            *(_fmt(v) for v in log.h_members[i]),
            _fmt(log.h_mode[i]),
            "1" if log.intervening[i] else "0",
        ]
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(log: TrajectoryLog, met: Metrics, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "schema": "fwrta-log/1",
        "scenario": log.scenario,
        "mode": log.mode,
        "dt": log.dt,
        "abort": log.abort,
        "columns": {
            "t": log.t.tolist(),
            "x": log.x.tolist(),
            "u_d": log.u_d.tolist(),
            "u": log.u.tolist(),
            "h_p": log.h_p.tolist(),
            "h_members": log.h_members.tolist(),
            "h_mode": log.h_mode.tolist(),
            "intervening": log.intervening.astype(int).tolist(),
            "warn": log.warn.astype(int).tolist(),
        },
        "metrics": {
            "min_h_p": met.min_h_p,
            "min_h_members": met.min_h_members,
            "min_h_mode": met.min_h_mode,
            "intervention_time": met.intervention_time,
            "max_abs_A_T": met.max_abs_A_T,
            "max_abs_P": met.max_abs_P,
            "max_abs_Q": met.max_abs_Q,
            "final_pos_err": met.final_pos_err,
            "min_V_T": met.min_V_T,
            "max_abs_d": met.max_abs_d,
            "max_p_dev": met.max_p_dev,
            "warning_count": met.warning_count,
            "aborted": met.aborted,
            "abort_reason": met.abort_reason,
        },
    }
    path.write_text(json.dumps(doc, indent=1))
    return path


class _Panel:
    """Minimal line-plot panel with linear data-to-pixel mapping."""

    def __init__(self, x0, y0, w, h, xlim, ylim, title):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xmin, self.xmax = xlim
        self.ymin, self.ymax = ylim
        if self.xmax <= self.xmin:
            self.xmax = self.xmin + 1.0
        if self.ymax <= self.ymin:
            self.ymax = self.ymin + 1.0
        self.title = title
        self.parts: list[str] = []

    def px(self, x):
        return self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.w

    def py(self, y):
        return self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h

    def line(self, xs, ys, color, width=1.2, dash=None):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{d} points="{pts}"/>'
        )

    def hline(self, y, color, dash="4 3"):
        self.line([self.xmin, self.xmax], [y, y], color, width=0.8, dash=dash)

    def svg(self):
        frame = (
            f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" '
            f'fill="white" stroke="#555"/>'
            f'<text x="{self.x0 + 4}" y="{self.y0 + 14}" font-size="12" fill="#333">{self.title}</text>'
            f'<text x="{self.x0}" y="{self.y0 + self.h + 12}" font-size="9" fill="#777">'
            f"x: [{self.xmin:.4g}, {self.xmax:.4g}]  y: [{self.ymin:.4g}, {self.ymax:.4g}]</text>"
        )
        return frame + "".join(self.parts)


def write_svg(log: TrajectoryLog, scn: Scenario, path: str | Path) -> Path:
    """Ground track with constraint geometry, barrier traces and inputs."""
    path = Path(path)
    W, H, pad = 820, 900, 45
    ph = (H - 4 * pad) / 3

    n, e = log.x[:, 0], log.x[:, 1]
    t_end = float(log.t[-1]) if len(log.t) else 1.0

    # panel 1: ground track (east on x, north on y)
    obs_paths = []
    for m in scn.cset.members:
        if isinstance(m, MovingObstacle):
            pts = np.array([m.trajectory(t)[0] for t in np.linspace(0.0, t_end, 50)])
            obs_paths.append(pts)
    all_e = np.concatenate([e] + [p[:, 1] for p in obs_paths]) if obs_paths else e
    all_n = np.concatenate([n] + [p[:, 0] for p in obs_paths]) if obs_paths else n
    mgn = 0.05 * max(np.ptp(all_e), np.ptp(all_n), 1.0)
    p1 = _Panel(
        pad, pad, W - 2 * pad, ph,
        (all_e.min() - mgn, all_e.max() + mgn),
        (all_n.min() - mgn, all_n.max() + mgn),
        f"ground track  ({log.scenario}, {log.mode})",
    )
    for m in scn.cset.members:
        if isinstance(m, GeofencePlane):
            nv = m.normal[:2]  # (n, e) components
            if np.linalg.norm(nv) < 1e-12:
                continue
            base = m.point[:2] + m.rho * m.normal[:2]
            tang = np.array([-nv[1], nv[0]])
            tang /= np.linalg.norm(tang)
            span = 4.0 * max(p1.xmax - p1.xmin, p1.ymax - p1.ymin)
            a = base - span * tang
            b = base + span * tang
            p1.line([a[1], b[1]], [a[0], b[0]], "#c0392b", width=1.5, dash="6 4")
    for pts in obs_paths:
        p1.line(pts[:, 1], pts[:, 0], "#8e44ad", width=1.0, dash="2 3")
    p1.line(e, n, "#1f77b4", width=1.6)

    # panel 2: barrier traces
    hs = [log.h_p, log.h_mode] + [log.h_members[:, i] for i in range(log.member_count)]
    lo = min(min(h.min() for h in hs), 0.0)
    hi = max(h.max() for h in hs)
    p2 = _Panel(pad, 2 * pad + ph, W - 2 * pad, ph, (0.0, t_end), (lo, hi), "barriers h(t)")
    p2.hline(0.0, "#999")
    colors = ["#2ca02c", "#ff7f0e", "#17becf", "#bcbd22", "#e377c2"]
    for i in range(log.member_count):
        p2.line(log.t, log.h_members[:, i], colors[(i + 2) % len(colors)], width=0.9)
    p2.line(log.t, log.h_p, colors[0], width=1.4)
    p2.line(log.t, log.h_mode, colors[1], width=1.4, dash="5 3")

    # panel 3: inputs
    us = [log.u[:, i] for i in range(3)] + [log.u_d[:, i] for i in range(3)]
    lo3 = min(u.min() for u in us)
    hi3 = max(u.max() for u in us)
    p3 = _Panel(pad, 3 * pad + 2 * ph, W - 2 * pad, ph, (0.0, t_end), (lo3, hi3), "inputs u(t) (desired dashed)")
    for i, c in enumerate(("#1f77b4", "#d62728", "#2ca02c")):
        p3.line(log.t, log.u_d[:, i], c, width=0.8, dash="3 3")
        p3.line(log.t, log.u[:, i], c, width=1.3)

    doc = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}"><rect width="{W}" height="{H}" fill="#fafafa"/>'
        + p1.svg() + p2.svg() + p3.svg() + "</svg>"
    )
    path.write_text(doc)
    return path


def export(log: TrajectoryLog, met: Metrics, scn: Scenario, fmt: str, out_dir: str | Path) -> Path:
    """Write one artifact of the requested format into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = out / f"{log.scenario}_{log.mode}"
    if fmt == "csv":
        return write_csv(log, base.with_suffix(".csv"))
    if fmt == "json":
        return write_json(log, met, base.with_suffix(".json"))
    if fmt == "svg":
        return write_svg(log, scn, base.with_suffix(".svg"))
    raise ValueError(f"unknown export format: {fmt!r}")
