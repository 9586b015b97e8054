"""Shared test utilities and independent brute-force oracles."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from polymm.chem import MolecularGraph

DATA = Path(__file__).parent / "data"


def corpus() -> list[str]:
    return [line.split()[0] for line in (DATA / "corpus.smi").read_text().splitlines() if line.strip()]


def write_csv(path: Path, header: list[str], rows: list[list[object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def synthetic_sources(root: Path, n_main: int = 60, seed: int = 7) -> Path:
    """Small main + supplementary CSVs with duplicates and one bad row; returns the config path."""
    rng = np.random.default_rng(seed)
    smiles = [s for s in corpus() if s.count("*") == 2][: n_main + 20]
    main_rows = []
    for s in smiles[:n_main]:
        tg = round(float(rng.normal(100, 60)), 3)
        ffv = round(float(rng.uniform(0.3, 0.45)), 5)
        tc = round(float(rng.uniform(0.15, 0.4)), 5) if rng.random() < 0.5 else ""
        den = round(float(rng.uniform(0.9, 1.4)), 5)
        rg = round(float(rng.uniform(8, 25)), 4) if rng.random() < 0.6 else ""
        main_rows.append([s, tg, ffv, tc, den, rg])
    main_rows.append(["*C(*", 1.0, "", "", "", ""])
    write_csv(root / "train.csv", ["SMILES", "Tg", "FFV", "Tc", "Density", "Rg"], main_rows)
    # supplement 1: one exact duplicate of a main Tc value plus fresh polymers
    dup = next(r for r in main_rows if r[3] != "")
    supp1 = [[dup[0], dup[3]]] + [[s, round(float(rng.uniform(0.15, 0.4)), 5)] for s in smiles[n_main:n_main + 10]]
    write_csv(root / "supp1.csv", ["SMILES", "TC_mean"], supp1)
    supp3 = [[s, round(float(rng.normal(80, 40)), 3)] for s in smiles[n_main + 10:]]
    write_csv(root / "supp3.csv", ["SMILES", "Tg"], supp3)
    supp4 = [[s, round(float(rng.uniform(0.3, 0.45)), 5)] for s in smiles[n_main + 5:n_main + 15]]
    write_csv(root / "supp4.csv", ["SMILES", "FFV"], supp4)
    config = root / "pipeline.ini"
    config.write_text(
        "[pipeline]\n"
        "output = out\n"
        "seed = 0\n"
        "ratio = 0.9\n"
        "img_size = 128\n"
        "\n[source:main]\npath = train.csv\n"
        "\n[source:supp1]\npath = supp1.csv\n"
        "\n[source:supp3]\npath = supp3.csv\n"
        "\n[source:supp4]\npath = supp4.csv\n"
        "\n[mlp]\nepochs = 20\n"
        "\n[lora]\nsteps = 50\n",
        encoding="utf-8",
    )
    return config


def read_smi(name: str) -> list[str]:
    return [line.split()[0] for line in (DATA / name).read_text().splitlines() if line.strip()]


def read_reference(name: str = "descriptors50.csv") -> list[dict[str, str]]:
    with open(DATA / name, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def dense_distances(graph: MolecularGraph) -> np.ndarray:
    """All-pairs edge-count distances by Floyd-Warshall on the adjacency matrix."""
    n = len(graph.atoms)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for b in graph.bonds:
        d[b.begin, b.end] = d[b.end, b.begin] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def brute_chi(graph: MolecularGraph) -> tuple[float, float]:
    d = dense_distances(graph)
    deg = (d == 1.0).sum(axis=1)
    chi0 = math.fsum(1.0 / math.sqrt(x) for x in deg)
    chi1 = math.fsum(
        1.0 / math.sqrt(deg[i] * deg[j]) for i in range(len(deg)) for j in range(i + 1, len(deg)) if d[i, j] == 1.0
    )
    return chi0, chi1


def brute_balaban(graph: MolecularGraph) -> float:
    d = dense_distances(graph)
    n = d.shape[0]
    s = d.sum(axis=1)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if d[i, j] == 1.0]
    mu = len(edges) - n + 1
    return len(edges) / (mu + 1) * math.fsum(1.0 / math.sqrt(s[i] * s[j]) for i, j in edges)


def to_networkx(graph: MolecularGraph):
    import networkx as nx

    g = nx.Graph()
    for a in graph.atoms:
        g.add_node(a.index, label=(a.number, a.charge, a.is_aromatic, a.total_h, a.isotope))
    for b in graph.bonds:
        g.add_edge(b.begin, b.end, order=int(b.order))
    return g


# acceptance verdicts, echoed in the terminal summary by conftest
ACCEPTANCE: list[str] = []


def verdict(name: str, ok: bool, detail: str = "") -> None:
    """Record and print one acceptance line, then fail the test when ``ok`` is false."""
    line = f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line
