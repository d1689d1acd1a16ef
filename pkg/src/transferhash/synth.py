"""Two-view synthetic datasets with shared latent cluster structure.

Both views are noisy random linear images of the same latent point, so
paired rows correlate across views and clusters survive in both; this is
what makes desk-scale transfer experiments meaningful.
"""

from __future__ import annotations

import os

import numpy as np

from .data import save_matrix

DEFAULT_CENTER_SPREAD = 4.0


def make_two_view_clusters(n_pairs: int, d_target: int, d_source: int,
                           clusters: int, noise: float, seed=0, *,
                           source_noise: float | None = None,
                           latent_dim: int | None = None,
                           center_spread: float = DEFAULT_CENTER_SPREAD):
    """Sample paired target/source views of clustered latent points.

    Returns (target, source, labels).  noise scales the additive Gaussian
    noise of the target view; source_noise defaults to the same value.
    """
    if min(n_pairs, d_target, d_source, clusters) < 1:
        raise ValueError("n_pairs, dimensions, and clusters must be positive")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    if source_noise is None:
        source_noise = noise
    if latent_dim is None:
        latent_dim = min(d_target, d_source, 16)

    rng = np.random.default_rng(seed)
    centers = center_spread * rng.standard_normal((clusters, latent_dim))
    labels = rng.integers(0, clusters, size=n_pairs)
    latent = centers[labels] + rng.standard_normal((n_pairs, latent_dim))
    map_t = rng.standard_normal((latent_dim, d_target)) / np.sqrt(latent_dim)
    map_s = rng.standard_normal((latent_dim, d_source)) / np.sqrt(latent_dim)
    target = latent @ map_t + noise * rng.standard_normal((n_pairs, d_target))
    source = latent @ map_s + source_noise * rng.standard_normal((n_pairs, d_source))
    # unit-RMS views keep entries near the +/-1 quantization targets, so
    # desk-scale hashing runs are well conditioned out of the box
    target /= np.sqrt((target ** 2).mean())
    source /= np.sqrt((source ** 2).mean())
    return target, source, labels


def write_synth_dataset(out_dir, n_pairs: int, d_target: int, d_source: int,
                        clusters: int, noise: float, seed=0, **kwargs) -> dict:
    """Generate and write target.bin / source.bin plus a manifest.

    Output bytes are a pure function of the parameters, so reruns with the
    same seed are byte-identical.
    """
    target, source, labels = make_two_view_clusters(
        n_pairs, d_target, d_source, clusters, noise, seed, **kwargs
    )
    os.makedirs(out_dir, exist_ok=True)
    target_path = os.path.join(out_dir, "target.bin")
    source_path = os.path.join(out_dir, "source.bin")
    labels_path = os.path.join(out_dir, "labels.csv")
    manifest_path = os.path.join(out_dir, "manifest.txt")
    save_matrix(target, target_path, "thpi-bin")
    save_matrix(source, source_path, "thpi-bin")
    with open(labels_path, "w", encoding="utf-8") as fh:
        for lab in labels:
            fh.write(f"{int(lab)}\n")
    params = dict(n_pairs=n_pairs, d_target=d_target, d_source=d_source,
                  clusters=clusters, noise=noise, seed=seed, **kwargs)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for key in sorted(params):
            fh.write(f"{key}={params[key]!r}\n")
        fh.write("target=target.bin\n")
        fh.write("source=source.bin\n")
        fh.write("labels=labels.csv\n")
    return {"target": target_path, "source": source_path,
            "labels": labels_path, "manifest": manifest_path}
