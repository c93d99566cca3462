#!/usr/bin/env python3
"""Smoke test for the apk_py extension module.

Builds nothing itself: expects `cargo build -p apk-py` to have produced
target/debug/libapk_py.so. Copies the shared object into a temp directory
under the importable name and exercises the main entry points end to end.

Run from the repository root:

    cargo build -p apk-py
    python3 python/smoke_test.py
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        REPO / "target" / "debug" / "libapk_py.so",
        REPO / "target" / "release" / "libapk_py.so",
        REPO / "target" / "debug" / "apk_py.so",
    ]
    src = next((p for p in candidates if p.exists()), None)
    if src is None:
        sys.exit("libapk_py.so not found; run `cargo build -p apk-py` first")
    tmp = Path(tempfile.mkdtemp(prefix="apk_py_"))
    shutil.copy(src, tmp / "apk_py.so")
    sys.path.insert(0, str(tmp))
    import apk_py

    return apk_py


def main():
    apk = import_module()
    print(f"apk_py {apk.__version__}")

    # Generation: an exact Fibonacci window plus a float control set.
    fib = apk.generate("fibonacci-cps", lo=[-300.0], hi=[300.0])
    assert fib.dim == 1 and fib.is_exact, fib
    assert 400 < len(fib) < 500, len(fib)
    gaps = sorted({round(b[0] - a[0], 6) for a, b in zip(fib.points(), fib.points()[1:])})
    assert len(gaps) == 2, gaps  # two tile lengths only
    print(f"generate: fibonacci-cps {len(fib)} points, gaps {gaps}")

    poisson = apk.generate("poisson-control", lo=[0.0], hi=[50.0], seed=7, r=0.4, big_r=2.0)
    assert not poisson.is_exact and len(poisson) > 10
    print(f"generate: poisson-control {len(poisson)} points")

    # JSON round trip preserves the scheme.
    text = fib.to_json()
    back = apk.PointSet.from_json(text)
    assert len(back) == len(fib) and back.is_exact
    assert json.loads(text)["scheme"] is not None
    print("json round trip ok")

    # Stripe search against a golden-ratio period, then re-verify and
    # recover the character from the certificate.
    cert = apk.search_stripe(fib, 3.618, 0.3, eps=0.05, off_anchors=200)
    spec = cert["spec"]
    assert cert["holds"] is True, cert
    assert abs(spec["l1"] - 3.618) < 0.05, spec["l1"]
    print(f"search_stripe: L1 = {spec['l1']:.6f}, L2 = {spec['l2']:.6f}, R = {spec['r']}")

    again = apk.verify_stripe(
        fib, spec["a"], spec["l1"], spec["l2"], spec["r"], off_anchors=200
    )
    assert again["holds"] is True
    print("verify_stripe: certificate re-checks")

    rec = apk.recover_character(fib, cert, eps_grid=[0.2, 0.1, 0.05, 0.02])
    assert rec["band_max"] < 0.25, rec["band_max"]
    assert rec["locator"]["relatively_dense"] is True
    print(f"recover_character: band_max = {rec['band_max']:.4f}, "
          f"locator r_e = {rec['locator']['r_e']:.4f}")

    # Eigenvalue enumeration and targeted lookup on the embedded scheme.
    eig = apk.eigenvalues(fib, phys_max=10.0, internal_max=10.0, limit=5)
    assert eig["total"] > 5
    found = apk.find_eigenvalue(fib, 3.618, eps=0.05)
    assert abs(found["period"] - 3.618) < 0.05
    print(f"eigenvalues: {eig['total']} characters <= caps, "
          f"target period {found['period']:.6f}")

    # Equivariance on an integer lattice: the lattice's own frequency is
    # exactly equivariant, an incommensurate one is not.
    lat = apk.generate("lattice", lo=[-200.0], hi=[200.0])
    flat = apk.equivariance(lat, [1.0], [1.0, 5.0, 20.0], off_anchors=100)
    mods = flat["report"]["omega"]
    assert max(mods) < 1e-9, mods
    rough = apk.equivariance(lat, [2.0 ** 0.5], [1.0, 5.0, 20.0], off_anchors=100)
    assert min(rough["report"]["omega"]) > 0.1
    print(f"equivariance: lattice own char {max(mods):.2e}, sqrt2 stays rough")

    # Locator set of a repeating patch is relatively dense.
    loc = apk.locator(fib, [0.0], 5.0)
    assert loc["relatively_dense"] is True
    assert len(loc["points"]["points"]) > 10
    print(f"locator: {len(loc['points']['points'])} repeats, r_e = {loc['r_e']:.4f}")

    # Axiom suite across all four pattern-space implementations.
    rep = apk.run_axioms(cases=150, seed=99)
    assert rep["failures"] == [], rep["failures"]
    print(f"run_axioms: {rep['cases']} cases clean")

    # Rank drops: {1} is trivial, {1, tau} collapses to a line.
    tau = (1 + 5 ** 0.5) / 2
    assert apk.vspace_rank([[1.0]], [1.0, 0.5, 0.1], 1000) == 0
    assert apk.vspace_rank([[1.0], [tau]], [1.0, 0.5, 0.1, 0.02], 1000) == 1
    print("vspace_rank: {1} -> 0, {1, tau} -> 1")

    # Matching distance: a set matches itself much better than a stranger.
    # The cross-family distance sits above the default grid, so `resolved`
    # comes back null there; compare the certified detail values instead.
    silver = apk.generate("silver-mean", lo=[-300.0], hi=[300.0])
    near = apk.match_distance(fib, fib)
    far = apk.match_distance(fib, silver)
    assert far["resolved"] is None
    assert near["detail"]["dist"] < far["detail"]["dist"]
    print(f"match_distance: self {near['detail']['dist']:.4f} "
          f"< cross {far['detail']['dist']:.4f}")

    # Errors surface as the right exception types.
    try:
        apk.generate("no-such-family", lo=[0.0], hi=[1.0])
    except ValueError:
        pass
    else:
        sys.exit("expected ValueError for unknown family")
    try:
        apk.search_stripe(poisson, 2.0, 0.1)
    except ValueError:
        pass
    else:
        sys.exit("expected ValueError for schemeless set")
    print("error mapping ok")

    print("smoke test passed")


if __name__ == "__main__":
    main()
