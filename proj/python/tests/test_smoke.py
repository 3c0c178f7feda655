import json
import os
from pathlib import Path

import pytest

import mcverify

CORPUS = Path(os.environ.get("MCV_CORPUS_DIR", Path(__file__).resolve().parents[2] / "tests" / "corpus"))


def test_point_verifies():
    r = mcverify.verify_file(str(CORPUS / "point.mcpp"))
    assert r.verified
    assert mcverify.exit_code([r]) == 0
    assert {o.verdict for o in r.obligations} == {"Verified"}


def test_subtyping_violation():
    r = mcverify.verify_file(str(CORPUS / "strengthened_pre.mcpp"))
    assert not r.verified
    bad = [o for o in r.obligations if not o.verified]
    assert [o.subject for o in bad] == ["B::foo() <: A::foo()"]
    assert bad[0].kind == "subtyping-check"
    assert bad[0].failure["category"] == "SubtypingViolation"
    assert bad[0].failure["conjunct"] == "this->x |-> ?v"
    assert mcverify.exit_code([r]) == 1


def test_syntax_error_exit_code():
    r = mcverify.verify_source("class A {", "broken.mcpp")
    assert r.errors
    assert r.errors[0].category == "SyntaxError"
    assert mcverify.exit_code([r]) == 2


def test_structured_is_json_and_stable():
    r = mcverify.verify_file(str(CORPUS / "shape_square.mcpp"))
    a = r.structured(trace=True)
    b = mcverify.verify_file(str(CORPUS / "shape_square.mcpp")).structured(trace=True)
    assert a == b
    doc = json.loads(a)
    assert doc["format"] == "mcverify-report"
    assert all("trace" in o for o in doc["files"][0]["obligations"])


def test_format_assertion():
    assert mcverify.format_assertion("B_m(d,?m)") == "B_m(d, ?m)"
    with pytest.raises(ValueError):
        mcverify.format_assertion("?x > 0")
