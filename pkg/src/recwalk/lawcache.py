"""CSV cache for computed laws.

One law per file: a header line (kind, param, truncation) followed by
(index, probability) rows, probabilities printed with 18 significant
digits.  Files are keyed by the law parameters, so a cache hit reproduces
the run that wrote it byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .return_laws import LONG, ReturnPositionLaw, return_position_law

FORMAT_VERSION = "recwalk-law-1"


class CacheCorruptionError(RuntimeError):
    pass


def _fmt(x) -> str:
    return np.format_float_scientific(LONG(x), precision=17, unique=False)


def position_law_path(cache_dir, lmax: int, kmax: int) -> Path:
    return Path(cache_dir) / f"return_position_L{lmax}_K{kmax}.csv"


def save_position_law(law: ReturnPositionLaw, cache_dir) -> Path:
    path = position_law_path(cache_dir, law.lmax, law.kmax)
    path.parent.mkdir(parents=True, exist_ok=True)
    param = (
        f"lmax={law.lmax};kmax={law.kmax};ktail={int(law.k_tail_completed)};"
        f"err={_fmt(law.error_bound)};tail={_fmt(law.tail_mass)};v={FORMAT_VERSION}"
    )
    lines = [f"return-position,{param},{_fmt(law.error_bound)}"]
    for t, p in enumerate(law.values):
        lines.append(f"{2 * t},{_fmt(p)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_position_law(path) -> ReturnPositionLaw:
    path = Path(path)
    try:
        lines = path.read_text().strip().splitlines()
        kind, param, _trunc = lines[0].split(",")
        if kind != "return-position":
            raise ValueError(f"unexpected law kind {kind!r}")
        fields = dict(kv.split("=", 1) for kv in param.split(";"))
        if fields.get("v") != FORMAT_VERSION:
            raise ValueError(f"unknown format version {fields.get('v')!r}")
        lmax, kmax = int(fields["lmax"]), int(fields["kmax"])
        values = np.empty(lmax // 2 + 1, dtype=LONG)
        count = 0
        for line in lines[1:]:
            idx, prob = line.split(",")
            values[int(idx) // 2] = LONG(prob)
            count += 1
        if count != lmax // 2 + 1:
            raise ValueError(f"expected {lmax // 2 + 1} rows, found {count}")
        return ReturnPositionLaw(
            lmax=lmax,
            kmax=kmax,
            values=values,
            error_bound=float(LONG(fields["err"])),
            tail_mass=float(LONG(fields["tail"])),
            k_tail_completed=bool(int(fields["ktail"])),
        )
    except (ValueError, KeyError, IndexError) as exc:
        raise CacheCorruptionError(
            f"law cache {path} is corrupted ({exc}); delete the file and rerun"
        ) from exc


def load_or_compute_position_law(
    cache_dir, lmax: int, kmax: int | None = None, k_tail: bool = True
) -> tuple[ReturnPositionLaw, bool]:
    """Return (law, cache_hit).

    A freshly computed law is written to the cache and read back before
    use, so downstream output depends only on the cache contents and is
    byte-identical whether or not the cache was warm.
    """
    if kmax is None:
        kmax = lmax * lmax
    path = position_law_path(cache_dir, lmax, kmax)
    if path.exists():
        return load_position_law(path), True
    law = return_position_law(lmax, kmax, k_tail=k_tail)
    save_position_law(law, cache_dir)
    return load_position_law(path), False
