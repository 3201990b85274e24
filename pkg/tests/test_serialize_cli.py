import json

import numpy as np
import pytest

from localadj import cli, forge
from localadj.errors import ParseError, UnresolvedReference
from localadj.serialize import DocumentBuilder, decode_tensor, dumps, encode_tensor, load, parse


def corpus_path(name):
    return str(next(p for p in cli.corpus_files() if p.name == name + ".json"))


def test_empty_document():
    doc = parse('{"version": "lac-1"}')
    assert doc.algebras == {} and doc.candidates == {} and doc.requests == []


def test_bad_version_and_syntax():
    with pytest.raises(ParseError) as exc:
        parse('{"version": "lac-0"}')
    assert exc.value.path == "$.version"
    with pytest.raises(ParseError) as exc:
        parse('{"version": ')
    assert "line 1" in exc.value.path
    with pytest.raises(ParseError):
        parse('{"version": "lac-1", "extra": {}}')


def test_dangling_reference():
    text = json.dumps({"version": "lac-1", "algebras": {"A": {"blocks": [1]}},
                       "candidates": {"c": {"correspondence": "missing", "pairing": []}}})
    with pytest.raises(UnresolvedReference) as exc:
        parse(text)
    assert exc.value.path == "$.candidates.c.correspondence"


def test_invariant_violation_names_field():
    F, cand = forge.forge_morita(1, 2)
    b = DocumentBuilder()
    b.candidate(cand, "c")
    raw = json.loads(b.text())
    raw["candidates"]["c"]["pairing"][0][0][0] = [-5.0, 0.0]
    with pytest.raises(ParseError) as exc:
        parse(json.dumps(raw))
    assert exc.value.path.startswith("$.candidates.c")


def test_tensor_encoding_round_trip():
    x = np.array([[1 + 2j, -0.5], [0.25j, 3.0]])
    assert encode_tensor(x) == [[[1.0, 2.0], [-0.5, 0.0]], [[0.0, 0.25], [3.0, 0.0]]]
    np.testing.assert_array_equal(decode_tensor(encode_tensor(x), "$"), x)
    with pytest.raises(ParseError):
        decode_tensor(encode_tensor(x), "$.t", shape=(3, 2))


def test_corpus_round_trip_is_byte_identical():
    path = corpus_path("morita_2_3")
    text = open(path, encoding="utf-8").read()
    assert dumps(parse(text)) == text
    for p in cli.corpus_files():
        t = p.read_text(encoding="utf-8")
        assert dumps(parse(t)) == t, p.name


def test_corpus_covers_every_family():
    names = {p.name[:-5] for p in cli.corpus_files()}
    for prefix in ("morita", "cover", "distinct", "psi", "sum", "ideal", "partial", "group", "random"):
        assert any(n.startswith(prefix) for n in names)


def test_builder_names_are_unique():
    b = DocumentBuilder()
    d = forge.forge_distinct_adjoints()
    b.candidate(d.cand_phi, "phi")
    b.candidate(d.cand_psi, "psi")
    doc = parse(b.text())
    assert sorted(doc.candidates) == ["phi", "psi"]
    assert len(doc.correspondences) == 1


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_certify_morita(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = run(["certify", corpus_path("morita_2_3"), "--samples", "200", "--out", str(out)], capsys)
    assert code == 0 and text.strip().endswith("PASS")
    rep = json.loads(out.read_text())
    assert rep["results"]["morita_2_3"]["is_full_adjunction"] is True
    assert len(rep["provenance"]["document_sha256"]) == 64
    # every summary line carries a residual and its tolerance
    for line in rep["summary"]:
        if "residual" in line:
            assert "(tol " in line


def test_cli_index_psi(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["index", corpus_path("psi_weight"), "--samples", "200", "--out", str(out)], capsys)
    rep = json.loads(out.read_text())
    assert code == 0
    rec = rep["results"]["expectations"]["psi_average"]
    assert rec["lambda_exact"] and rec["lambda"] == pytest.approx(3.0, abs=1e-9)


def test_cli_forge_sum(capsys):
    code, text, err = run(["forge", "sum", "--m", "8"], capsys)
    assert code == 0
    assert "slope 0.5" in err and err.strip().endswith("pass")
    doc = parse(text)
    assert list(doc.candidates) == ["sum_8"]


@pytest.mark.parametrize("family,extra", [("cover", ["--k", "3"]), ("morita", ["--n", "2", "--m", "2"]),
                                          ("distinct", []), ("ideal", ["--blocks", "1,2", "--subset", "1"]),
                                          ("partial", []), ("group", ["--group", "s3-irrep"]),
                                          ("random", ["--seed", "3"])])
def test_cli_forge_families_validate(family, extra, tmp_path, capsys):
    out = tmp_path / "doc.json"
    assert run(["forge", family, *extra, "--out", str(out)], capsys)[0] == 0
    assert run(["validate", str(out)], capsys)[0] == 0


def test_exit_codes(tmp_path, capsys):
    assert run(["validate", str(tmp_path / "missing.json")], capsys)[0] == 1
    assert run(["bogus"], capsys)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1}')
    assert run(["validate", str(bad)], capsys)[0] == 1
    assert run(["forge", "group", "--group", "nope"], capsys)[0] == 1
    assert run(["certify", corpus_path("morita_1_2"), "--levels", "0"], capsys)[0] == 1
    # a non-faithful expectation certifies false
    from localadj.algebra import MultiMatrixAlgebra
    from localadj.module import algebra_module

    b = DocumentBuilder()
    b.module(algebra_module(MultiMatrixAlgebra([1, 1])), "X")
    raw = json.loads(b.text())
    raw["expectations"] = {"e": {"kind": "block", "module": "X", "groups": [[0, 1]], "sizes": [1],
                                 "mus": {"0": 1.0, "1": 0.0}}}
    p = tmp_path / "nf.json"
    p.write_text(json.dumps(raw))
    assert run(["index", str(p)], capsys)[0] == 2


def test_report_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    path = corpus_path("distinct_adjoints")
    run(["report", path, "--samples", "300", "--out", str(a)], capsys)
    run(["report", path, "--samples", "300", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()
    assert load(path).requests
