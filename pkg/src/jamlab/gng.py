"""Growing neural gas clustering.

Incremental topology-learning quantizer used to discover the discrete
vocabulary of a signal. Training draws samples with replacement via
idx = floor(u * n) so results depend only on the seed and the sample
multiset, and runs a fixed budget of epochs * n adaptation steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GNGConfig:
    max_nodes: int = 4
    eps_b: float = 0.2
    eps_n: float = 0.006
    age_max: int = 50
    insert_interval: int = 100
    error_alpha: float = 0.5
    error_decay: float = 0.995
    epochs: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.max_nodes < 2:
            raise ValueError("max_nodes must be >= 2")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def gng_train(samples: np.ndarray, cfg: GNGConfig) -> np.ndarray:
    """Cluster samples, returning node positions (n_nodes, dim).

    Standard growing neural gas: move the winner and its topological
    neighbours toward each sample, age and prune stale edges, insert a new
    node between the highest-error pair every insert_interval steps until
    max_nodes is reached.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or len(samples) < 2:
        raise ValueError("need at least 2 samples of shape (n, dim)")
    rng = np.random.default_rng(cfg.seed)
    n = len(samples)

    i0 = int(rng.random() * n)
    i1 = int(rng.random() * n)
    nodes = [samples[i0].copy(), samples[i1].copy()]
    errors = [0.0, 0.0]
    edges: dict[tuple[int, int], int] = {(0, 1): 0}

    def neighbours(i: int) -> list[int]:
        out = []
        for (a, b) in edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out

    total_steps = cfg.epochs * n
    for step in range(1, total_steps + 1):
        x = samples[int(rng.random() * n)]
        d2 = np.sum((np.asarray(nodes) - x) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")
        s1, s2 = int(order[0]), int(order[1])

        errors[s1] += d2[s1]
        nodes[s1] += cfg.eps_b * (x - nodes[s1])
        for j in neighbours(s1):
            key = (min(s1, j), max(s1, j))
            edges[key] += 1
            nodes[j] += cfg.eps_n * (x - nodes[j])
        edges[(min(s1, s2), max(s1, s2))] = 0

        stale = [k for k, age in edges.items() if age > cfg.age_max]
        for k in stale:
            del edges[k]
        # drop nodes with no edges left, remapping indices
        connected = set()
        for a, b in edges:
            connected.add(a)
            connected.add(b)
        if len(connected) < len(nodes):
            keep = sorted(connected)
            remap = {old: new for new, old in enumerate(keep)}
            nodes = [nodes[i] for i in keep]
            errors = [errors[i] for i in keep]
            edges = {(remap[a], remap[b]): age for (a, b), age in edges.items()}

        if step % cfg.insert_interval == 0 and len(nodes) < cfg.max_nodes:
            q = int(np.argmax(errors))
            nb = neighbours(q)
            if nb:
                f = nb[int(np.argmax([errors[j] for j in nb]))]
                new = 0.5 * (nodes[q] + nodes[f])
                nodes.append(new)
                r = len(nodes) - 1
                del edges[(min(q, f), max(q, f))]
                edges[(min(q, r), max(q, r))] = 0
                edges[(min(f, r), max(f, r))] = 0
                errors[q] *= cfg.error_alpha
                errors[f] *= cfg.error_alpha
                errors.append(errors[q])

        errors = [e * cfg.error_decay for e in errors]

    return np.asarray(nodes)
