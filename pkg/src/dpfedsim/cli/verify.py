"""Self-checks run by ``dpfed verify``: operator properties, noise calibration,
the ratio-inequality grid and the local-descent inequalities on the synthetic suite."""

from __future__ import annotations

import math

import numpy as np

from dpfedsim.analysis.lemmas import fact3_grid, lemma_suite
from dpfedsim.fedopt.operators import clip, normalize
from dpfedsim.objectives.suite import generate_quadratic_suite, heterogeneity_profile, solve_global_optimum
from dpfedsim.privacy import PrivacyBudget, calibrate_noise_variance, gaussian_block
from dpfedsim.streams import StreamKey, standard_normals, uniforms

REL_TOL = 1e-12


def operator_properties(count: int = 100_000, seed: int = 0) -> tuple[bool, str]:
    """Idempotence and nonexpansiveness of clip, exact norm of normalize, and
    clip == normalize outside the ball, over random vectors and thresholds."""
    key = StreamKey(seed).child("operators")
    failures = 0
    per_dim = -(-count // 3)
    for dim in (1, 2, 200):
        z = standard_normals(key.child("z", dim), per_dim * dim).reshape(per_dim, dim)
        y = standard_normals(key.child("y", dim), per_dim * dim).reshape(per_dim, dim)
        scale = np.exp(4 * uniforms(key.child("scale", dim), per_dim) - 2)
        z *= scale[:, None]
        c = np.exp(4 * uniforms(key.child("c", dim), per_dim) - 2) * math.sqrt(dim)
        for i in range(per_dim):
            cz = clip(z[i], c[i])
            nz = np.linalg.norm(z[i])
            if np.linalg.norm(clip(cz, c[i]) - cz) > REL_TOL * max(1.0, np.linalg.norm(cz)):
                failures += 1
            gap = np.linalg.norm(cz - clip(y[i], c[i]))
            if gap > np.linalg.norm(z[i] - y[i]) * (1 + REL_TOL) + REL_TOL:
                failures += 1
            if abs(np.linalg.norm(normalize(z[i], c[i])) - c[i]) > REL_TOL * c[i]:
                failures += 1
            if nz >= c[i] and np.linalg.norm(cz - normalize(z[i], c[i])) > REL_TOL * c[i]:
                failures += 1
    return failures == 0, f"{3 * per_dim} vectors, {failures} failures"


def noise_calibration(samples: int = 100_000) -> tuple[bool, str]:
    budget = PrivacyBudget(5.0, 1e-6, 100, 200)
    sigma2 = calibrate_noise_variance(budget, 500, 100.0, 100).sigma_squared
    block = gaussian_block(StreamKey(0).child("noise-check"), samples // 200, 200, sigma2)
    ratio = float(block.var()) / sigma2
    k2 = calibrate_noise_variance(budget, 1000, 100.0, 100).sigma_squared / sigma2
    c2 = calibrate_noise_variance(budget, 500, 200.0, 100).sigma_squared / sigma2
    ok = abs(ratio - 1) <= 0.05 and abs(k2 - 2) <= 2 * REL_TOL and abs(c2 - 4) <= 4 * REL_TOL
    return ok, f"variance ratio {ratio:.4f}, K-doubling {k2!r}, C-doubling {c2!r}"


def ratio_grid() -> tuple[bool, str]:
    count, failures = fact3_grid()
    return not failures, f"{count} grid points, {len(failures)} violations"


def lemmas(samples: int = 100, seed: int = 0) -> tuple[bool, str]:
    """Local trajectories from random points around w*, at eta = 1/(2 L E)."""
    suite = generate_quadratic_suite(StreamKey(0).child("suite"))
    w_star = solve_global_optimum(suite)
    heterogeneity_profile(suite, w_star)
    E = 20
    L = suite.smoothness_bound
    eta = 1 / (2 * L * E)
    key = StreamKey(seed).child("lemma-starts")
    clients = (uniforms(key.child("client"), samples) * suite.n).astype(int)
    offsets = standard_normals(key.child("offset"), samples * suite.dimension)
    starts = [(j, int(i), w_star + off) for j, (i, off) in
              enumerate(zip(clients, offsets.reshape(samples, suite.dimension)))]
    report = lemma_suite(suite, starts, eta, E)
    checked = sum(report.checked.values())
    return report.ok, f"{checked} inequalities checked, {len(report.violations)} violations"


CHECKS = {
    "operators": operator_properties,
    "noise": noise_calibration,
    "ratio-grid": ratio_grid,
    "lemmas": lemmas,
}


def run_checks(print_fn=print) -> bool:
    all_ok = True
    for name, check in CHECKS.items():
        ok, detail = check()
        all_ok &= ok
        print_fn(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
