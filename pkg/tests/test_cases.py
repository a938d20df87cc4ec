import pytest

from jetlaw.cases import load_corpus, parse_case, run_case, run_corpus

CASES = load_corpus()


def test_corpus_has_fourteen_cases():
    assert len(CASES) == 14
    assert len({c.name for c in CASES}) == 14


@pytest.mark.parametrize("case", CASES, ids=[c.name for c in CASES])
def test_case_verifies(case):
    r = run_case(case)
    assert r.verified, (r.outcome, r.detail)


def test_printed_families_fail_with_residual():
    failing = [c for c in CASES if c.expect == "fails"]
    assert len(failing) == 2
    for c in failing:
        r = run_case(c)
        assert r.outcome == "fails" and r.detail


def test_reference_mismatch_is_reported():
    text = """#! check: approx-conslaw
#! expect: order-1-zero
#! printed-t: u_t
#! printed-x: -u_x
indep t x; dep u; eps order 1;
eq W: u_tt - u_xx + eps*u_t = 0 lead u_tt;
gen X: xi(t)=1, eta(u)=-1/2*eps*u;
subst w = 1/2*u + 1/2*eps*t*u;
"""
    r = run_case(parse_case(text, "probe"))
    assert r.outcome == "order-1-zero (reference mismatch)" and not r.verified


def test_unknown_check_rejected():
    with pytest.raises(ValueError):
        parse_case("#! check: nope\nindep t x; dep u;", "bad")


def test_run_corpus_on_directory(tmp_path):
    (tmp_path / "a.pde").write_text("#! check: nsa\n#! expect: holds\n"
                                    "indep t x; dep u; eq L: u_tt - u_xx = 0 lead u_tt; subst v = u;")
    [r] = run_corpus(tmp_path)
    assert r.verified
