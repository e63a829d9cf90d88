"""Stage 3: KD-tree Euclidean clustering, cluster descriptors and Doppler/RCS retention."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from radarpercept.constants import RADIUS_SLACK
from radarpercept.core import RadarFrame, Vector3, unit_vectors
from radarpercept.ego_motion import EgoState
from radarpercept.errors import EmptyCluster
from radarpercept.filtering import FilterProfile

logger = logging.getLogger(__name__)


class ClusteringParams(BaseModel):
    """Euclidean clustering settings."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    d_th: float = Field(default=0.6, gt=0.0)
    min_points: int = Field(default=3, ge=1)
    rcs_bin_width: float = Field(default=1.0, gt=0.0)


class RetentionRules(BaseModel):
    """Cluster retention thresholds.

    Unset RCS bounds follow the active filter profile; see `resolved`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    v_min_retain: float = Field(default=0.25, ge=0.0)
    rcs_retain_min: Optional[float] = None
    rcs_retain_max: Optional[float] = None

    @model_validator(mode="after")
    def _check_window(self) -> "RetentionRules":
        if self.rcs_retain_min is not None and self.rcs_retain_max is not None:
            if self.rcs_retain_min >= self.rcs_retain_max:
                raise ValueError(
                    f"rcs_retain_min ({self.rcs_retain_min}) must be less than rcs_retain_max ({self.rcs_retain_max})"
                )
        return self

    def resolved(self, profile: FilterProfile) -> "RetentionRules":
        """Return a copy with unset RCS bounds taken from a filter profile."""
        return RetentionRules(
            v_min_retain=self.v_min_retain,
            rcs_retain_min=profile.rcs_min if self.rcs_retain_min is None else self.rcs_retain_min,
            rcs_retain_max=profile.rcs_max if self.rcs_retain_max is None else self.rcs_retain_max,
        )


class SpatialIndex:
    """Immutable KD-tree over point positions answering radius queries."""

    def __init__(self, xyz: np.ndarray) -> None:
        """Build the index.

        Args:
            xyz: (N, 3) positions.
        """
        self._xyz = np.array(xyz, dtype=float).reshape(-1, 3)
        self._xyz.setflags(write=False)
        self._tree = cKDTree(self._xyz) if len(self._xyz) else None

    def _distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return np.sqrt(((self._xyz[i] - self._xyz[j]) ** 2).sum(axis=1))

    def query_radius(self, center: Sequence[float], r: float) -> np.ndarray:
        """Get the sorted indices of points within distance r of center, boundary included."""
        if self._tree is None:
            return np.empty(0, dtype=np.intp)
        center_arr = np.asarray(center, dtype=float)
        candidates = np.asarray(self._tree.query_ball_point(center_arr, r + RADIUS_SLACK), dtype=np.intp)
        distances = np.sqrt(((self._xyz[candidates] - center_arr) ** 2).sum(axis=1))
        return np.sort(candidates[distances <= r + RADIUS_SLACK])

    def neighbor_pairs(self, r: float, strict: bool = True) -> np.ndarray:
        """Get every index pair (i < j) closer than r (strict) or within r (not strict), as an (M, 2) array."""
        if self._tree is None:
            return np.empty((0, 2), dtype=np.intp)
        # Widen the tree query slightly so the exact comparison below decides the boundary.
        pairs = self._tree.query_pairs(r * (1 + 1e-9) + RADIUS_SLACK, output_type="ndarray")
        if not len(pairs):
            return np.empty((0, 2), dtype=np.intp)
        distances = self._distances(pairs[:, 0], pairs[:, 1])
        keep = distances < r if strict else distances <= r + RADIUS_SLACK
        return pairs[keep]

    def __len__(self) -> int:
        """Return the number of indexed points."""
        return int(self._xyz.shape[0])


def build_spatial_index(points: Union[RadarFrame, np.ndarray]) -> SpatialIndex:
    """Build a KD-tree over the spatial coordinates of a frame or an (N, 3) array."""
    xyz = points.xyz if isinstance(points, RadarFrame) else points
    return SpatialIndex(xyz)


@dataclass(frozen=True, eq=False)
class Cluster:
    """A connected group of points, by index into the clustered frame."""

    indices: np.ndarray
    members: RadarFrame

    def __len__(self) -> int:
        """Return the number of member points."""
        return len(self.members)

    def __repr__(self) -> str:
        """Return a short representation."""
        return f"Cluster(points={len(self)}, first={int(self.indices[0]) if len(self.indices) else None})"


@dataclass(frozen=True)
class ClusterDescriptors:
    """Summary values of one cluster."""

    mean_doppler: float
    comp_mean_doppler: float
    modal_rcs: float
    centroid: Vector3
    point_count: int


def euclidean_cluster(points: RadarFrame, params: ClusteringParams) -> list[Cluster]:
    """Split a frame into radius-connected components.

    Two points are linked when their distance is strictly below `params.d_th`; components smaller than
    `params.min_points` are dropped. Members are listed in increasing index order and clusters are ordered by their
    smallest member index.

    Args:
        points: Frame to cluster.
        params: Clustering settings.

    Returns:
        list[Cluster]: The retained components.
    """
    n = len(points)
    if n == 0:
        return []
    pairs = build_spatial_index(points).neighbor_pairs(params.d_th, strict=True)
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    boundaries = np.flatnonzero(np.diff(labels[order])) + 1
    groups = [g for g in np.split(order, boundaries) if len(g) >= params.min_points]
    groups.sort(key=lambda g: int(g[0]))
    logger.debug("Clustered %d points into %d components (%d kept)", n, labels.max() + 1, len(groups))
    return [Cluster(g, points.subset(g)) for g in groups]


def mean_doppler(cluster: Cluster) -> float:
    """Get the arithmetic mean Doppler of a cluster.

    Raises:
        EmptyCluster: If the cluster has no members.
    """
    if len(cluster) == 0:
        raise EmptyCluster("Mean Doppler of an empty cluster")
    return float(np.mean(cluster.members.doppler))


def compensated_mean_doppler(cluster: Cluster, ego: EgoState) -> float:
    """Get the mean of (Doppler - v_ego · r̂) over members, skipping members at the sensor origin.

    Raises:
        EmptyCluster: If no member has a defined line of sight.
    """
    unit, valid = unit_vectors(cluster.members.xyz)
    if not valid.any():
        raise EmptyCluster("No cluster member has a line of sight")
    return float(np.mean(cluster.members.doppler[valid] - unit[valid] @ ego.vector))


def modal_rcs(cluster: Cluster, bin_width: float = 1.0) -> float:
    """Get the center of the most populated RCS histogram bin, ties going to the lower bin.

    Bins are [k * bin_width, (k + 1) * bin_width).

    Raises:
        EmptyCluster: If the cluster has no members.
    """
    if len(cluster) == 0:
        raise EmptyCluster("Modal RCS of an empty cluster")
    bins = np.floor(cluster.members.rcs / bin_width).astype(np.int64)
    values, counts = np.unique(bins, return_counts=True)
    return float((values[np.argmax(counts)] + 0.5) * bin_width)


def describe(cluster: Cluster, ego: EgoState, bin_width: float = 1.0) -> ClusterDescriptors:
    """Compute every descriptor of a single cluster."""
    centroid = cluster.members.xyz.mean(axis=0)
    return ClusterDescriptors(
        mean_doppler=mean_doppler(cluster),
        comp_mean_doppler=compensated_mean_doppler(cluster, ego),
        modal_rcs=modal_rcs(cluster, bin_width),
        centroid=(float(centroid[0]), float(centroid[1]), float(centroid[2])),
        point_count=len(cluster),
    )


def describe_clusters(clusters: Sequence[Cluster], ego: EgoState, bin_width: float = 1.0) -> list[ClusterDescriptors]:
    """Compute the descriptors of many clusters in one vectorised pass.

    Raises:
        EmptyCluster: If a cluster is empty or has no member with a line of sight.
    """
    if not clusters:
        return []
    counts = np.array([len(c) for c in clusters])
    if (counts == 0).any():
        raise EmptyCluster("Cannot describe an empty cluster")
    k = len(clusters)
    labels = np.repeat(np.arange(k), counts)
    xyz = np.concatenate([c.members.xyz for c in clusters])
    doppler = np.concatenate([c.members.doppler for c in clusters])
    rcs = np.concatenate([c.members.rcs for c in clusters])

    means = np.bincount(labels, weights=doppler, minlength=k) / counts
    centroids = np.stack([np.bincount(labels, weights=xyz[:, axis], minlength=k) for axis in range(3)], axis=1)
    centroids /= counts[:, None]

    unit, valid = unit_vectors(xyz)
    valid_counts = np.bincount(labels[valid], minlength=k)
    if (valid_counts == 0).any():
        raise EmptyCluster("A cluster has no member with a line of sight")
    compensated = doppler[valid] - unit[valid] @ ego.vector
    comp_means = np.bincount(labels[valid], weights=compensated, minlength=k) / valid_counts

    bins = np.floor(rcs / bin_width).astype(np.int64)
    keys, key_counts = np.unique(np.stack([labels, bins], axis=1), axis=0, return_counts=True)
    # Per label: highest count first, then lowest bin.
    order = np.lexsort((keys[:, 1], -key_counts, keys[:, 0]))
    _, first = np.unique(keys[order, 0], return_index=True)
    modal = (keys[order[first], 1] + 0.5) * bin_width

    return [
        ClusterDescriptors(
            mean_doppler=float(means[i]),
            comp_mean_doppler=float(comp_means[i]),
            modal_rcs=float(modal[i]),
            centroid=(float(centroids[i, 0]), float(centroids[i, 1]), float(centroids[i, 2])),
            point_count=int(counts[i]),
        )
        for i in range(k)
    ]


def retains(descriptors: ClusterDescriptors, rules: RetentionRules) -> bool:
    """Check the retention rule: moving beyond v_min_retain, or modal RCS inside the retained window.

    Raises:
        ValueError: If the rules' RCS window has not been resolved.
    """
    if rules.rcs_retain_min is None or rules.rcs_retain_max is None:
        raise ValueError("RetentionRules RCS window is unset; call RetentionRules.resolved(profile) first")
    return (
        abs(descriptors.comp_mean_doppler) > rules.v_min_retain
        or rules.rcs_retain_min <= descriptors.modal_rcs <= rules.rcs_retain_max
    )


def retain_clusters(
    clusters: Sequence[Cluster], descriptors: Sequence[ClusterDescriptors], rules: RetentionRules
) -> list[tuple[Cluster, ClusterDescriptors]]:
    """Keep the clusters that satisfy the retention rule, in their original order.

    Args:
        clusters: Candidate clusters.
        descriptors: One descriptor per cluster, aligned with `clusters`.
        rules: Resolved retention rules.

    Returns:
        list: (cluster, descriptors) pairs of the retained clusters.
    """
    if len(clusters) != len(descriptors):
        raise ValueError(f"Got {len(clusters)} clusters but {len(descriptors)} descriptors")
    return [(c, d) for c, d in zip(clusters, descriptors) if retains(d, rules)]
