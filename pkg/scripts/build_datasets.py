"""Write data/wine.csv and data/ecoli.csv.

wine comes from scikit-learn's bundled copy. The UCI ecoli file is rebuilt
from the one-vs-rest KEEL derivations shipped in the ``imbalanced-databases``
wheel (the UCI server is not always reachable), by intersecting positive and
negative row sets. Requires ``scikit-learn`` and ``imbalanced-databases``.
"""
from __future__ import annotations

import csv
import sys
from collections import Counter
from pathlib import Path

ECOLI_COLUMNS = ["mcg", "gvh", "lip", "chg", "aac", "alm1", "alm2"]


def _read_keel(path: Path) -> list[tuple[tuple[str, ...], bool]]:
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        parts = [p.strip() for p in line.split(",")]
        feats = tuple(f"{float(v):.2f}" for v in parts[:-1])
        rows.append((feats, parts[-1] == "positive"))
    return rows


def _positives(root: Path, name: str) -> Counter:
    return Counter(f for f, pos in _read_keel(root / name / f"{name}.dat") if pos)


def _mangled(feats: tuple[str, ...], width: int) -> tuple[str, ...]:
    # multi-class derivations may drop chg and write 0.40 as 4.0, 0.07 as 7.0
    out = []
    for i, v in enumerate(feats):
        if i == 3 and width == 6:
            continue
        digits = str(float(v)).lstrip("0.") or "0"
        out.append(f"{float(digits):.2f}")
    return tuple(out)


def _positives_mangled(root: Path, name: str, base: list) -> Counter:
    """Positives of a multi-class derivation, translated back to base rows."""
    rows = _read_keel(root / name / f"{name}.dat")
    width = len(rows[0][0])
    wanted = Counter(f for f, pos in rows if pos)
    found: Counter = Counter()
    for feats, _ in base:
        key = _mangled(feats, width)
        if wanted[key] > 0:
            wanted[key] -= 1
            found[feats] += 1
    if sum(wanted.values()):
        sys.exit(f"unmatched rows in {name}")
    return found


def build_ecoli(out: Path) -> None:
    import imbalanced_databases

    root = Path(imbalanced_databases.__file__).parent / "data"
    base = _read_keel(root / "ecoli1" / "ecoli1.dat")
    known = {
        "im": _positives(root, "ecoli1"),
        "pp": _positives(root, "ecoli2"),
        "imU": _positives(root, "ecoli3"),
        "om": _positives(root, "ecoli4"),
    }
    # cp vs im: every row of that file which is not im is cp
    cp_im = Counter(f for f, _ in _read_keel(root / "ecoli-0_vs_1" / "ecoli-0_vs_1.dat"))
    known["cp"] = cp_im - known["im"]
    known["omL"] = _positives_mangled(root, "ecoli-0-1-4-7_vs_5-6", base) - known["om"]
    known["imS"] = _positives_mangled(root, "ecoli-0-1-3-7_vs_2-6", base) - known["omL"]

    remaining = {k: Counter(v) for k, v in known.items()}
    labelled = []
    for feats, _ in base:
        for name, pool in remaining.items():
            if pool[feats] > 0:
                pool[feats] -= 1
                labelled.append((feats, name))
                break
        else:
            labelled.append((feats, "imL"))
    counts = Counter(name for _, name in labelled)
    expected = {"cp": 143, "im": 77, "pp": 52, "imU": 35, "om": 20, "omL": 5, "imL": 2, "imS": 2}
    if dict(counts) != expected:
        sys.exit(f"ecoli reconstruction mismatch: {dict(counts)}")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ECOLI_COLUMNS + ["class"])
        for feats, name in labelled:
            w.writerow(list(feats) + [name])


def build_wine(out: Path) -> None:
    from sklearn.datasets import load_wine

    bunch = load_wine()
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(bunch.feature_names) + ["class"])
        for row, target in zip(bunch.data, bunch.target):
            w.writerow([repr(float(v)) for v in row] + [f"class_{target + 1}"])


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data"
    dest.mkdir(parents=True, exist_ok=True)
    build_wine(dest / "wine.csv")
    build_ecoli(dest / "ecoli.csv")
