"""Output writers: RFC-4180 CSV tables, canonical JSON summaries, matplotlib figures.

Every run directory gets the delimited data, a ``summary.json`` with the
resolved configuration embedded, and a rendered figure next to them.  All
deterministic content is byte-stable for a fixed configuration and seed;
wall-clock timing goes to a separate ``timing.json`` that is excluded from
the reproducibility contract.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__

ARTIFACT = f"hmlab {__version__}"


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def canonical_json(obj) -> str:
    def default(o):
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Path):
            return str(o)
        raise TypeError(f"not JSON serializable: {type(o)}")

    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=default) + "\n"


def write_csv(path: Path, fieldnames, rows, config: dict | None = None):
    """RFC-4180 table with a short comment preamble carrying the resolved config."""
    buf = io.StringIO()
    buf.write(f"# artifact: {ARTIFACT}\n")
    if config is not None:
        buf.write(f"# config: {canonical_json(config).strip()}\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k, "")) for k in fieldnames})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def write_summary(path: Path, payload: dict):
    payload = dict(payload)
    payload.setdefault("artifact", ARTIFACT)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(canonical_json(payload))


def write_timing(path: Path, seconds: float, threads: int):
    Path(path).write_text(canonical_json({
        "artifact": ARTIFACT,
        "runtime_seconds": seconds,
        "threads": threads,
        "note": "wall clock; excluded from the byte-reproducibility contract",
    }))


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, metadata={"Software": ARTIFACT})
    plt.close(fig)


def render_exit_histogram(path, probs, oracle=None, title="exit distribution"):
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    x = np.arange(len(probs))
    ax.bar(x, probs, width=1.0, color="#4878cf", label="sampled")
    if oracle is not None:
        ax.step(np.arange(len(oracle) + 1) - 0.5, np.append(oracle, oracle[-1]),
                where="post", color="#d1022f", lw=1.2, label="oracle")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("cell index")
    ax.set_ylabel("probability")
    ax.set_title(title, fontsize=10)
    _save(fig, path)


def render_probe(path, records, verdict, title="probe"):
    ns = [r.n for r in records]
    f = [r.f_hat for r in records]
    ci = [r.ci for r in records]
    floor = [r.noise_floor for r in records]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.errorbar(ns, f, yerr=np.array(ci) * 2, marker="o", ms=4, lw=1.2,
                color="#2a4d9b", capsize=3, label="f_hat (2 ci)")
    ax.plot(ns, floor, ls="--", lw=1.0, color="#888888", label="noise floor")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("exhaustion index n")
    ax.set_ylabel("total variation")
    ax.set_ylim(-0.05, 2.1)
    ax.set_title(f"{title}  [{verdict}]", fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_matrix(path, labels, values, title="pairwise final TV"):
    n = len(labels)
    grid = np.full((n, n), np.nan)
    for (i, j), v in values.items():
        grid[i, j] = v
        grid[j, i] = v
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(grid, vmin=0, vmax=2, cmap="viridis")
    ax.set_xticks(range(n), labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), labels, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(title, fontsize=10)
    _save(fig, path)


def render_comb(path, rows, title="comb exit concentration"):
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    valid = [r for r in rows if r.get("valid")]
    xs = np.arange(len(valid))
    ax.bar(xs, [r["concentration"] for r in valid], color="#4878cf")
    ax.axhline(0.7, color="#d1022f", lw=1.0, ls="--")
    ax.set_xticks(xs, [f"slot {r['slot']}\nn={r['n']}" for r in valid], fontsize=8)
    ax.set_ylabel("mass within 0.25 of (0, 1)")
    ax.set_ylim(0, 1)
    ax.set_title(title, fontsize=10)
    _save(fig, path)


def render_pushed(path, edges, masses, title="pushed boundary measure"):
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    centers = 0.5 * (edges[:-1] + edges[1:])
    ax.bar(centers, masses, width=edges[1] - edges[0], color="#4878cf")
    ax.set_xlabel("boundary coordinate")
    ax.set_ylabel("weight mass")
    ax.set_title(title, fontsize=10)
    _save(fig, path)


def render_oracle(path, psi, densities, labels, title="annulus exit densities"):
    fig, ax = plt.subplots(figsize=(5.8, 3.4))
    for dens, lab in zip(densities, labels):
        ax.plot(psi, dens, lw=1.2, label=lab)
    ax.set_xlabel("angle on inner circle")
    ax.set_ylabel("conditional density")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(title, fontsize=10)
    _save(fig, path)


def render_acceptance(path, results):
    fig, ax = plt.subplots(figsize=(6.8, 3.6))
    names = [r["name"] for r in results]
    ok = [bool(r["passed"]) for r in results]
    colors = ["#2d8a43" if p else "#c22f2f" for p in ok]
    ax.barh(range(len(names)), [1] * len(names), color=colors)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    ax.set_xticks([])
    ax.invert_yaxis()
    ax.set_title(f"acceptance: {sum(ok)}/{len(ok)} criteria passed", fontsize=10)
    _save(fig, path)
