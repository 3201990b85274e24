"""Regenerate the bundled corpus under src/localadj/corpus."""
import os
import sys

import numpy as np

from localadj import forge
from localadj.serialize import DocumentBuilder

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "localadj", "corpus")


def cover_doc(cover, name):
    b = DocumentBuilder()
    _, cand = forge.forge_cover(cover)
    b.candidate(cand, name)
    b.cover_expectation(cover, name + "_average")
    return b


def single(cand, name):
    b = DocumentBuilder()
    b.candidate(cand, name)
    return b


def group_doc(gi, name):
    b = DocumentBuilder()
    b.candidate(gi.cand, name)
    b.group_expectation(gi.action, name + "_average")
    return b


def documents():
    docs = {}
    for n, m in [(1, 2), (2, 2), (2, 3)]:
        docs[f"morita_{n}_{m}"] = single(forge.forge_morita(n, m)[1], f"morita_{n}_{m}")
    for k in (2, 3, 4):
        docs[f"cover_{k}"] = cover_doc(forge.uniform_cover(k), f"cover_{k}")
    docs["cover_weighted"] = cover_doc(forge.FiniteCover(3, 1, [0, 0, 0], [0.5, 0.25, 0.25]), "cover_weighted")
    docs["cover_two_points"] = cover_doc(forge.FiniteCover(3, 2, [0, 0, 1], [0.5, 0.5, 1.0]), "cover_two_points")
    da = forge.forge_distinct_adjoints()
    b = DocumentBuilder()
    b.candidate(da.cand_phi, "phi")
    b.candidate(da.cand_psi, "psi")
    b.cover_expectation(forge.FiniteCover(2, 1, [0, 0], [0.5, 0.5]), "phi_weight")
    b.cover_expectation(forge.FiniteCover(2, 1, [0, 0], [2 / 3, 1 / 3]), "psi_weight")
    b.request("validate")
    for target in ("phi", "psi"):
        b.request("certify", target, seed=0)
    b.request("index", "psi_weight")
    b.request("expectation", "psi_weight")
    docs["distinct_adjoints"] = b
    docs["psi_weight"] = cover_doc(forge.FiniteCover(2, 1, [0, 0], [2 / 3, 1 / 3]), "psi")
    docs["sum_family_4"] = single(forge.forge_sum_family(4).cand, "sum_4")
    docs["ideal_pair_1_2"] = single(forge.forge_ideal_pair([1, 2], [1])[1], "ideal_pair")
    docs["partial_action"] = single(forge.forge_partial_action()[1], "partial_action")
    docs["group_z2_cover"] = group_doc(forge.forge_swap_cover(), "z2_cover")
    docs["group_z3_cover"] = group_doc(forge.forge_cyclic_cover(3), "z3_cover")
    docs["group_s3_twisted"] = group_doc(forge.forge_s3_twisted_cover(), "s3_twisted")
    docs["group_s3_irrep"] = group_doc(forge.forge_s3_irrep(), "s3_irrep")
    docs["group_z2_plane"] = group_doc(forge.forge_z2_on_plane(), "z2_plane")
    rng = np.random.default_rng(2024)
    for i in range(2):
        docs[f"random_{i}"] = single(forge.random_candidate(rng), f"random_{i}")
    return docs


def main(out=OUT):
    os.makedirs(out, exist_ok=True)
    for name, b in documents().items():
        with open(os.path.join(out, name + ".json"), "w", encoding="utf-8") as fh:
            fh.write(b.text())
        print(name)


if __name__ == "__main__":
    main(*sys.argv[1:])
