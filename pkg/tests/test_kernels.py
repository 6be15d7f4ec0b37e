import json
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

import uscharvest
from uscharvest.kernels import StackedCSR


def _random_real_blocks(rng, dim=40, n_blocks=3):
    blocks = []
    for _ in range(n_blocks):
        b = sp.random(dim, dim, density=0.08, random_state=int(rng.integers(1e6)))
        blocks.append(sp.csr_matrix(b))
    return blocks


def test_matvec_matches_explicit_sum():
    rng = np.random.default_rng(0)
    blocks = _random_real_blocks(rng)
    stacked = StackedCSR(blocks)
    coeffs = rng.normal(size=3)
    x = rng.normal(size=40) + 1j * rng.normal(size=40)
    y = stacked.matvec(coeffs, x, scale=-1j)
    ref = -1j * sum(c * (b @ x) for c, b in zip(coeffs, blocks))
    assert np.max(np.abs(y - ref)) < 1e-12


def test_combine_matches_explicit_sum():
    rng = np.random.default_rng(1)
    blocks = _random_real_blocks(rng, dim=25)
    stacked = StackedCSR(blocks)
    coeffs = rng.normal(size=3) + 1j * rng.normal(size=3)
    h = stacked.combine(coeffs)
    ref = sum(c * b for c, b in zip(coeffs, blocks))
    assert np.max(np.abs((h - ref).toarray())) < 1e-12


def test_zero_coefficient_skipped_consistently():
    rng = np.random.default_rng(2)
    blocks = _random_real_blocks(rng)
    stacked = StackedCSR(blocks)
    coeffs = np.array([0.0, 1.3, 0.0])
    x = rng.normal(size=40) + 1j * rng.normal(size=40)
    y = stacked.matvec(coeffs, x)
    assert np.max(np.abs(y - 1.3 * (blocks[1] @ x))) < 1e-12


def test_complex_blocks_supported_by_combine_only():
    b = sp.csr_matrix(np.array([[0.0, 1.0j], [-1.0j, 0.0]]))
    stacked = StackedCSR([b])
    assert not stacked.real_blocks
    h = stacked.combine(np.array([2.0]))
    assert np.max(np.abs((h - 2 * b).toarray())) < 1e-15
    with pytest.raises(NotImplementedError):
        stacked.matvec(np.array([2.0]), np.zeros(2, dtype=complex))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        StackedCSR([sp.identity(3), sp.identity(4)])


def test_backends_agree_across_processes():
    """The compiled path and the forced pure-python path produce identical
    bytes for the same linear-combination matvec."""
    script = (
        "import numpy as np, scipy.sparse as sp, json\n"
        "from uscharvest.kernels import StackedCSR, BACKEND\n"
        "rng = np.random.default_rng(7)\n"
        "blocks = [sp.csr_matrix(sp.random(30, 30, density=0.1,\n"
        "          random_state=k)) for k in range(4)]\n"
        "s = StackedCSR(blocks)\n"
        "c = rng.normal(size=4)\n"
        "x = rng.normal(size=30) + 1j * rng.normal(size=30)\n"
        "y = s.matvec(c, x, scale=-1j)\n"
        "print(json.dumps({'backend': BACKEND, 'y': [[v.real, v.imag]\n"
        "      for v in y]}))\n"
    )
    results = {}
    for force in ("0", "1"):
        env = dict(os.environ, USCHARVEST_PURE_PYTHON=force)
        if force == "0":
            env.pop("USCHARVEST_PURE_PYTHON")
        out = subprocess.run([sys.executable, "-c", script], env=env,
                             capture_output=True, text=True, check=True)
        results[force] = json.loads(out.stdout)
    if results["0"]["backend"] == "python":
        pytest.skip("compiled extension unavailable")
    ya = np.array(results["0"]["y"])
    yb = np.array(results["1"]["y"])
    assert np.max(np.abs(ya - yb)) < 1e-13
