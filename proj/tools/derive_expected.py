#!/usr/bin/env python3
"""Brute-force reference values for the unit tests.

Computed with numpy/scipy independently of the C++ code and frozen into
tests/data/expected.json. Rerun only when a fixture definition changes.
"""
import json
import pathlib

import numpy as np
from scipy.linalg import eigh


def nn_dists(adv, ref):
    d = np.linalg.norm(adv[:, None, :] - ref[None, :, :], axis=2)
    return d.min(axis=1)


def chamfer(adv, ref):
    return float(np.mean(nn_dists(adv, ref) ** 2))


def hausdorff(adv, ref):
    return float(np.max(nn_dists(adv, ref)))


def variance(adv, ref):
    return float(np.var(nn_dists(adv, ref)))


def knn_edges(pts, k):
    n = len(pts)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    edges = set()
    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (d[i, j], j))
        for j in order[:k]:
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


def laplacian(n, edges):
    lap = np.zeros((n, n))
    for i, j in edges:
        lap[i, j] = lap[j, i] = -1.0
    lap[np.diag_indices(n)] = -lap.sum(axis=1)
    return lap


def normalize(pts):
    c = pts - pts.mean(axis=0)
    return c / np.linalg.norm(c, axis=1).max()


def sor_keep(pts, k, alpha):
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    means = np.sort(d, axis=1)[:, :k].mean(axis=1)
    thr = means.mean() + alpha * means.std(ddof=1)
    return [int(i) for i in np.nonzero(means <= thr)[0]]


def main():
    rng = np.random.default_rng(20240611)
    out = {}

    out["normalize_pair"] = normalize(np.array([[0, 0, 0], [2, 0, 0]], float)).tolist()
    out["collinear_k1_edges"] = knn_edges(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], float), 1)

    cloud64 = rng.uniform(-1, 1, (64, 3))
    out["cloud64"] = cloud64.tolist()
    out["cloud64_k10_edges"] = knn_edges(cloud64, 10)

    adv = rng.normal(0, 0.5, (40, 3))
    ref = rng.normal(0, 0.5, (50, 3))
    out["metric_pair"] = {
        "adv": adv.tolist(),
        "ref": ref.tolist(),
        "chamfer": chamfer(adv, ref),
        "chamfer_symmetric": 0.5 * (chamfer(adv, ref) + chamfer(ref, adv)),
        "hausdorff": hausdorff(adv, ref),
        "variance": variance(adv, ref),
    }
    out["chamfer_two_points"] = chamfer(np.array([[1, 0, 0], [0, 0, 0]], float), np.zeros((1, 3)))
    out["hausdorff_far"] = hausdorff(np.array([[0, 0, 0], [3, 0, 0]], float), np.zeros((1, 3)))
    out["variance_0_2"] = variance(np.array([[0, 0, 0], [2, 0, 0]], float), np.zeros((1, 3)))
    out["l2_two_displaced"] = float(np.linalg.norm(np.array([0.3, 0.3])))
    out["combined_example"] = 0.5 + 2.0 * 3.0 + 0.5 * 1.0

    w, v = eigh(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    v = v * np.sign(v[0])
    out["eigen_2x2"] = {"values": w.tolist(), "vectors": v.T.tolist()}
    out["gft_pair_x"] = (v.T @ np.array([0.0, 2.0])).tolist()

    cloud16 = rng.uniform(-1, 1, (16, 3))
    edges16 = knn_edges(cloud16, 4)
    out["cloud16"] = cloud16.tolist()
    out["cloud16_k4_eigenvalues"] = eigh(laplacian(16, edges16), eigvals_only=True).tolist()

    side = 6
    grid = np.array([[x, y, 0.0] for y in range(side) for x in range(side)])
    outlier = 2 * side + 2
    grid_out = grid.copy()
    grid_out[outlier, 2] += 10.0
    out["sor_grid"] = {
        "points": grid_out.tolist(),
        "outlier": outlier,
        "kept": sor_keep(grid_out, 2, 1.1),
        "kept_clean": sor_keep(grid, 2, 1.1),
    }

    path = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "expected.json"
    path.write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
