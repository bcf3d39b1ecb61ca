"""Virtual groups of users with shared interests, and data-hub selection.

Users are clustered on normalized object-interest vectors with K-Means,
split into sub-groups by home DTN, and each group gets a local data hub
chosen by a weighted score over network throughput, free resources, and
request frequency.  Hot objects replicate to the hub under a byte
budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .intervals import IntervalSet


@dataclass
class UserInterestVector:
    user_id: str
    home_dtn: int
    vector: np.ndarray  # L2-normalized request counts over the catalog

    @property
    def is_active(self) -> bool:
        return bool(np.any(self.vector))


@dataclass
class VirtualGroup:
    group_id: int
    member_ids: list[str]
    centroid: np.ndarray
    sub_groups: dict[int, list[str]] = field(default_factory=dict)
    hub_dtn: int | None = None


@dataclass
class HubSelectionInputs:
    throughput: dict[tuple[int, int], float]      # P_ij, Gbps
    available_fraction: dict[int, float]          # U_i in [0, 1]
    request_frequency: dict[int, float]           # F_i, requests per hour
    weights: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("hub score weights must sum to 1")
        if any(u < 0 for u in self.available_fraction.values()):
            raise ValueError("inputs must be non-negative")


def kmeans(x: np.ndarray, k: int, seed: int, max_iter: int = 100,
           tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Plain K-Means with k-means++ seeding; deterministic per seed."""
    rng = np.random.default_rng(seed)
    n = len(x)
    k = min(k, n)
    centroids = np.empty((k, x.shape[1]))
    idx = int(rng.integers(0, n))
    centroids[0] = x[idx]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i] = x[int(rng.integers(0, n))]
        else:
            centroids[i] = x[int(rng.choice(n, p=d2 / total))]
        d2 = np.minimum(d2, np.sum((x - centroids[i]) ** 2, axis=1))

    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        dists = np.linalg.norm(x[:, None, :] - centroids[None, :, :], axis=2)
        labels = np.argmin(dists, axis=1)
        shift = 0.0
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new_c = members.mean(axis=0)
                shift = max(shift, float(np.linalg.norm(new_c - centroids[j])))
                centroids[j] = new_c
        if shift <= tol:
            break
    return labels, centroids


def cluster_users(vectors: list[UserInterestVector], k: int,
                  seed: int) -> list[VirtualGroup]:
    """Group active users by interest, then sub-group by home DTN.

    Idle (zero-vector) users are excluded; k drops to the number of
    active users when there are fewer than k of them.
    """
    active = [v for v in vectors if v.is_active]
    if not active:
        return []
    k = max(1, min(k, len(active)))
    x = np.stack([v.vector for v in active])
    labels, centroids = kmeans(x, k, seed)

    groups = []
    for j in range(k):
        members = [active[i] for i in range(len(active)) if labels[i] == j]
        if not members:
            continue
        sub: dict[int, list[str]] = {}
        for m in sorted(members, key=lambda v: v.user_id):
            sub.setdefault(m.home_dtn, []).append(m.user_id)
        groups.append(VirtualGroup(
            group_id=len(groups),
            member_ids=sorted(v.user_id for v in members),
            centroid=centroids[j],
            sub_groups=dict(sorted(sub.items())),
        ))
    return groups


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi - lo <= 0:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def select_hub(candidates: list[int], inputs: HubSelectionInputs) -> int:
    """Weighted argmax over normalized throughput, free space, frequency.

    Each term is min-max normalized across the candidates (a constant
    term contributes zero), so the weights compare like with like.
    Ties break to the lowest DTN id.
    """
    if not candidates:
        raise ValueError("no candidate DTNs for hub selection")
    cands = sorted(candidates)
    p_raw = [sum(inputs.throughput.get((i, j), 0.0) for j in cands if j != i)
             for i in cands]
    u_raw = [inputs.available_fraction.get(i, 0.0) for i in cands]
    f_raw = [inputs.request_frequency.get(i, 0.0) for i in cands]
    tp, tu, tf = inputs.weights
    scores = [tp * p + tu * u + tf * f
              for p, u, f in zip(_minmax(p_raw), _minmax(u_raw), _minmax(f_raw))]
    best = max(range(len(cands)), key=lambda i: (scores[i], -cands[i]))
    return cands[best]


def replicate_hot(access_counts: dict[str, int],
                  desired_ranges: dict[str, IntervalSet],
                  budget_bytes: float,
                  rate_of) -> list[tuple[str, IntervalSet, float]]:
    """Greedy hot-object replication plan under a byte budget.

    Objects are ranked by group access count (ties by id); whole objects
    are taken while they fit, and the plan stops at the first one that
    does not.
    """
    ranked = sorted(access_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    plan = []
    remaining = budget_bytes
    for object_id, _count in ranked:
        ranges = desired_ranges.get(object_id, [])
        size = sum(e - s for s, e in ranges) * rate_of(object_id)
        if size <= 0:
            continue
        if size > remaining:
            break
        plan.append((object_id, ranges, size))
        remaining -= size
    return plan
