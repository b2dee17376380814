#!/usr/bin/env python3
"""Smoke test for the spdfuse_py extension module.

Builds nothing itself: expects the cdylib to exist under target/release (or
target/debug), stages it under an importable name, and exercises the main
types and operations end to end.

    cargo build -p spdfuse-py --release
    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        REPO / "target" / "release" / "libspdfuse_py.so",
        REPO / "target" / "debug" / "libspdfuse_py.so",
        REPO / "target" / "release" / "libspdfuse_py.dylib",
        REPO / "target" / "debug" / "libspdfuse_py.dylib",
    ]
    src = next((p for p in candidates if p.exists()), None)
    if src is None:
        sys.exit("build the extension first: cargo build -p spdfuse-py --release")
    stage = Path(tempfile.mkdtemp(prefix="spdfuse_py_"))
    shutil.copy2(src, stage / "spdfuse_py.so")
    sys.path.insert(0, str(stage))


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol * (1.0 + abs(b))


def main() -> None:
    stage_module()
    import spdfuse_py as sf

    print(f"spdfuse_py {sf.__version__}")

    # Eigendecomposition: [[2,1],[1,2]] has eigenvalues 1 and 3.
    values, vectors = sf.eig_sym([[2.0, 1.0], [1.0, 2.0]])
    assert approx(values[0], 1.0) and approx(values[1], 3.0), values
    assert len(vectors) == 2 and len(vectors[0]) == 2

    # Covariance and cross-covariance of a hand-checked segment:
    # columns (1,1) and (-1,-1).
    data = [[1.0, -1.0], [1.0, -1.0]]
    s = sf.covariance(data)
    c = sf.cross_covariance(data)
    assert all(approx(s[i][j], 2.0) for i in range(2) for j in range(2)), s
    assert all(approx(c[i][j], -1.0) for i in range(2) for j in range(2)), c

    # Block SPD from a noisy two-channel segment.
    import random

    rng = random.Random(7)
    noisy = [[rng.gauss(0.0, 1.0) for _ in range(200)] for _ in range(3)]
    p = sf.segment_to_spd(noisy, m=2, shrinkage=1e-6, centering="per-segment")
    assert p.dim == 6 and p.min_eig > 0.0, (p.dim, p.min_eig)

    # Geodesic distance: d(I, 4I) in 2-D is sqrt(2)*ln(4); symmetry holds.
    eye = sf.SpdMatrix([[1.0, 0.0], [0.0, 1.0]])
    four = sf.SpdMatrix([[4.0, 0.0], [0.0, 4.0]])
    d = sf.geodesic_distance(eye, four)
    assert approx(d, math.sqrt(2.0) * math.log(4.0)), d
    assert approx(sf.geodesic_distance(four, eye), d)

    # Geometric mean of {I, 4I} is 2I.
    mean = sf.geometric_mean([eye, four])
    assert approx(mean.rows()[0][0], 2.0, 1e-7), mean.rows()

    # Tangent map/unmap round trip and norm compatibility.
    t = sf.tangent_map(four, eye)
    assert approx(math.sqrt(sum(x * x for x in t)), d), t
    back = sf.tangent_unmap(t, eye)
    assert all(
        approx(back.rows()[i][j], four.rows()[i][j], 1e-8)
        for i in range(2)
        for j in range(2)
    )

    # vec operator: [[1,2],[2,3]] -> [1, 2*sqrt(2), 3], norm-preserving.
    v = sf.vec_sym([[1.0, 2.0], [2.0, 3.0]])
    assert approx(v[1], 2.0 * math.sqrt(2.0)) and approx(v[2], 3.0), v
    assert approx(math.sqrt(sum(x * x for x in v)), math.sqrt(18.0))
    assert sf.unvec_sym(v)[0][1] == v[1] / math.sqrt(2.0)

    # Train the classifier on a separable toy problem.
    seqs, labels = [], []
    for k in range(40):
        label = k % 2 == 0
        base = 1.5 if label else -1.5
        seqs.append(
            [[base + rng.uniform(-0.4, 0.4), rng.uniform(-1, 1)] for _ in range(3)]
        )
        labels.append(label)
    model = sf.SequenceModel.train(
        seqs, labels, hidden=8, epochs=30, lr=0.01, dropout=0.0, batch_size=8, seed=3
    )
    preds = model.predict(seqs)
    acc = sum(1 for (p, _), y in zip(preds, labels) if p == y) / len(labels)
    assert acc >= 0.95, f"toy accuracy {acc}"
    assert len(model.loss_curve) == 30
    assert 0.0 < model.predict_proba(seqs[0]) < 1.0

    # Errors surface as Python exceptions.
    try:
        sf.SpdMatrix([[1.0, 0.0], [0.0, -1.0]])
    except ValueError:
        pass
    else:
        sys.exit("indefinite matrix was accepted")

    print("smoke test OK: eig, S/C/P, distances, mean, tangent maps, classifier")


if __name__ == "__main__":
    main()
