"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import time

import numpy as np

from localadj import cli, forge
from localadj.adjunction import (InnerProductCandidate, amplified_isometry_residual, canonical_comparison,
                                 certify, ideal_decomposition, index_search, naturality_residuals,
                                 numerical_indices, os_comparison, phi_cb_bounds, phi_map, ternary_check)
from localadj.expectation import fk_index, w_uniqueness_check
from localadj.module import algebra_module, direct_sum
from localadj.tensor import hilbert_correspondence

RESULTS = []


def report(n, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed <= budget
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s of {budget:.0f}s]"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_hilbert_space_ratios():
    t = time.perf_counter()
    worst = 0.0
    for d in range(1, 9):
        cand = InnerProductCandidate(hilbert_correspondence(d), np.eye(d)[:, :, None])
        # frame witnesses plus random draws; the draws must not push the ratio past sqrt(d)
        up, _ = os_comparison(cand, levels=d, samples=30, rng=d)
        worst = max(worst, abs(up[-1] - np.sqrt(d)))
    report(1, worst <= 1e-6, f"max |ratio - sqrt(d)| = {worst:.2e} for d = 1..8", time.perf_counter() - t, 5)


def test_criterion_02_group_averages():
    t = time.perf_counter()
    instances = [forge.forge_swap_cover(), forge.forge_cyclic_cover(3), forge.forge_s3_twisted_cover(),
                 forge.forge_s3_irrep()]
    ok = any(gi.action.twisted() for gi in instances)
    worst_phi = worst_inv = worst_w = 0.0
    for gi in instances:
        W = gi.action.order
        ok &= gi.action.module.dim <= 12
        cb = phi_cb_bounds(gi.cand)
        flag, res = w_uniqueness_check(gi.action, gi.cand, gi.average)
        worst_phi = max(worst_phi, abs(cb.cb_phi - 1))
        worst_inv = max(worst_inv, cb.cb_phi_inv - np.sqrt(W))
        worst_w = max(worst_w, res)
        ok &= abs(cb.cb_phi - 1) <= 1e-8 and cb.cb_phi_inv <= np.sqrt(W) + 1e-8 and flag
    report(2, ok, f"|cb_phi - 1| <= {worst_phi:.2e}, cb_phi_inv - sqrt|W| <= {worst_inv:.3f}, "
                  f"w-uniqueness residual {worst_w:.2e}", time.perf_counter() - t, 60)


def test_criterion_03_uniform_covers():
    t = time.perf_counter()
    ok, worst, tri = True, 0.0, 0.0
    for k in (2, 3, 4):
        cover = forge.uniform_cover(k)
        phi, _ = forge.cover_expectation(cover)
        fk = fk_index(phi)
        _, cand = forge.forge_cover(cover)
        c = certify(cand, samples=500, levels=2)
        worst = max(worst, abs(fk.lam - k), abs(fk.kappa - k))
        tri = max(tri, *c.triangle_residuals)
        ok &= fk.lam_exact and abs(fk.lam - k) <= 1e-9 and abs(fk.kappa - k) <= 1e-9
        ok &= c.is_full_adjunction and max(c.triangle_residuals) <= 1e-10
    report(3, ok, f"max |lambda - k|, |kappa - k| = {worst:.2e}, triangle residual {tri:.2e}",
           time.perf_counter() - t, 10)


def test_criterion_04_morita():
    t = time.perf_counter()
    ok, idx, tern, iso = True, 0.0, 0.0, 0.0
    for n, m in [(1, 2), (2, 2), (2, 3)]:
        _, cand = forge.forge_morita(n, m)
        l, r = numerical_indices(cand)
        rep = ternary_check(cand, trials=20, rng=0)
        res = amplified_isometry_residual(phi_map(cand), levels=4, trials=10, rng=1)
        idx, tern, iso = max(idx, abs(l - 1), abs(r - 1)), max(tern, rep.ternary_residual), max(iso, res)
    ok = idx <= 1e-9 and tern <= 1e-10 and iso <= 1e-8
    report(4, ok, f"|l - 1|, |r - 1| <= {idx:.2e}, ternary {tern:.2e}, amplified isometry {iso:.2e}",
           time.perf_counter() - t, 30)


def test_criterion_05_distinct_adjoints():
    t = time.perf_counter()
    d = forge.forge_distinct_adjoints()
    lp, ls = fk_index(d.phi).lam, fk_index(d.psi).lam
    gap = canonical_comparison(d.cand_phi, d.cand_psi).polar_gap
    local = all(certify(c, samples=500, levels=2).is_local_adjoint for c in (d.cand_phi, d.cand_psi))
    ok = abs(lp - 2) <= 1e-9 and abs(ls - 3) <= 1e-9 and local and gap >= 0.05
    report(5, ok, f"lambda(phi) = {lp:.9f}, lambda(psi) = {ls:.9f}, both local adjoints: {local}, "
                  f"polar gap {gap:.4f}", time.perf_counter() - t, 5)


def test_criterion_06_index_search_soundness():
    t = time.perf_counter()
    rng = np.random.default_rng(606)
    count, over, small_gap, small = 50, 0.0, 0.0, 0
    ok = True
    for i in range(count):
        # every forged candidate has passed validation
        cand = forge.random_candidate(rng)
        l, r = numerical_indices(cand)
        for side, exact in (("l", l), ("r", r)):
            found = index_search(cand, side, rng=i + 1)
            # the search never exceeds the closed form beyond floating-point rounding
            over = max(over, (found - exact) / exact)
            ok &= found <= exact * (1 + 1e-9)
            if cand.dim <= 6:
                small_gap = max(small_gap, exact - found)
                ok &= exact - found <= 1e-3
        small += cand.dim <= 6
    report(6, ok, f"{count} instances, max relative excess {over:.1e}, "
                  f"max shortfall {small_gap:.1e} over {small} of dim <= 6", time.perf_counter() - t, 300)


def instance_zoo():
    d = forge.forge_distinct_adjoints()
    zoo = [forge.forge_morita(2, 3)[1], forge.forge_cover(forge.uniform_cover(3))[1], d.cand_phi, d.cand_psi,
           forge.forge_partial_action()[1], forge.forge_s3_irrep().cand, forge.forge_z2_on_plane().cand]
    rng = np.random.default_rng(707)
    zoo += [forge.random_candidate(rng) for _ in range(3)]
    return zoo


def test_criterion_07_naturality_and_swap():
    t = time.perf_counter()
    nat, swap = 0.0, 0.0
    for cand in instance_zoo():
        X, Y = algebra_module(cand.A), algebra_module(cand.B)
        r1, r2 = naturality_residuals(cand, X, Y, direct_sum(X, X), direct_sum(Y, Y), trials=100, rng=0)
        nat = max(nat, r1, r2)
        a = certify(cand, samples=300, levels=2, naturality_trials=5)
        b = certify(cand.swapped(), samples=300, levels=2, naturality_trials=5)
        swap = max(swap, abs(b.l - a.r) / max(a.r, 1), abs(b.r - a.l) / max(a.l, 1))
    report(7, nat <= 1e-10 and swap <= 1e-9,
           f"naturality residual {nat:.2e} over 100 triples, swapped index defect {swap:.2e}",
           time.perf_counter() - t, 300)


def test_criterion_08_partial_actions():
    t = time.perf_counter()
    worst = 0.0
    cases = [forge.forge_partial_action()] + [forge.forge_ideal_pair(b, s) for b, s in
                                              [([1, 2], [1]), ([2, 1, 1], [0, 2]), ([1, 1, 2], [2])]]
    ok = True
    for _, cand in cases:
        dec = ideal_decomposition(cand)
        A = cand.A
        psum = dec.ideal_A.projection() + dec.complement_A.projection()
        worst = max(worst, dec.residual_A, float(np.abs(psum - A.unit_coords).max()))
        ok &= dec.complementary and (set(dec.ideal_A.block_subset) | set(dec.complement_A.block_subset)
                                     == set(range(A.nblocks)))
    report(8, ok and worst <= 1e-10, f"reconstruction residual {worst:.2e} over {len(cases)} instances",
           time.perf_counter() - t, 60)


def test_criterion_09_sum_family():
    t = time.perf_counter()
    fam = forge.forge_sum_family(8)
    dev = max(abs(q - np.sqrt(i)) for i, q in enumerate(fam.ratios, start=1))
    report(9, dev <= 1e-6 and abs(fam.slope - 0.5) <= 0.05,
           f"max |ratio - sqrt(i)| = {dev:.2e}, slope {fam.slope:.6f}", time.perf_counter() - t, 60)


def test_criterion_10_corpus_determinism(tmp_path):
    runs = []
    for tag in "ab":
        t = time.perf_counter()
        out = tmp_path / f"{tag}.json"
        code = cli.main(["report", "--corpus", "--out", str(out)])
        runs.append((code, out.read_bytes(), time.perf_counter() - t))
    same = runs[0][1] == runs[1][1]
    slowest = max(r[2] for r in runs)
    ok = same and all(r[0] == 0 for r in runs) and slowest <= 600
    report(10, ok, f"{len(cli.corpus_files())} documents, byte-identical: {same}, exit codes "
                   f"{[r[0] for r in runs]}", slowest, 600)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn(Path(tempfile.mkdtemp())) if "tmp_path" in fn.__code__.co_varnames else fn()
            except AssertionError:
                pass
