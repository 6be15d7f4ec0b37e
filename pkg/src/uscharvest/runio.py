"""Run persistence: per-run directories, manifests, CSV/JSON writers.

Each run writes under ``<out>/<scenario>-<confighash>-<seed>/``; data files
are deterministic for a fixed (config, seed), and the manifest carries a
fingerprint over everything except wall time.
"""

import hashlib
import json
import os
import tempfile
import time


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(mapping):
    return hashlib.sha256(canonical_json(mapping).encode()).hexdigest()[:10]


def run_directory(out_root, scenario, mapping, seed):
    name = f"{scenario}-{config_hash(mapping)}-{seed}"
    path = os.path.join(out_root, name)
    os.makedirs(path, exist_ok=True)
    return path


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_json(path, data):
    write_atomic(path, json.dumps(data, indent=1, sort_keys=True) + "\n")


def write_manifest(run_dir, scenario, mapping, seed, outputs,
                   convergence, wall_time_s, extra=None):
    """Manifest with a wall-time-independent fingerprint."""
    core = {
        "scenario": scenario,
        "config": mapping,
        "config_hash": config_hash(mapping),
        "seed": seed,
        "outputs": sorted(outputs),
        "convergence": convergence,
    }
    if extra:
        core.update(extra)
    manifest = dict(core)
    manifest["fingerprint"] = config_hash(core)
    manifest["wall_time_s"] = round(wall_time_s, 3)
    path = os.path.join(run_dir, "manifest.json")
    write_json(path, manifest)
    return path


class StopWatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
