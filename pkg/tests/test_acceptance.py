"""One test per acceptance criterion; each prints a PASS/FAIL line.

Criterion 11 is expected to fail (see the README): the test still asserts a
pass, and is marked as a strict expected failure so a change in outcome is
noticed either way.
"""

import pytest

from crystal_lab.battery import CRITERIA, run_criterion


def _line(r):
    return f"criterion {r['id']}: {r['status'].upper()}  {r['title']}  ({r['seconds']} s)"


def _check(cid, acceptance_log):
    r = run_criterion(cid)
    acceptance_log(_line(r))
    print(_line(r))
    for sup in r.get("supplementary", []):
        print(f"  supplementary {sup['identity']}: {sup['status'].upper()}")
    return r


@pytest.mark.parametrize("cid", [c for c in CRITERIA if c != 11])
def test_criterion(cid, acceptance_log):
    r = _check(cid, acceptance_log)
    assert r["status"] == "pass", [x["residual"] for x in r["reports"] if x["status"] != "pass"]


@pytest.mark.xfail(strict=True, reason="finite-window rational flow leaves the quotient form; certified mod p")
def test_criterion_11(acceptance_log):
    r = _check(11, acceptance_log)
    rep = r["reports"][0]
    # the failure is real evidence: nonzero residuals mod p are nonzero over Q
    assert rep["params"]["arithmetic"] == "modular"
    assert any(p["residual"] != "0" for p in rep["points"])
    assert r["supplementary"][0]["status"] == "pass"
    assert r["status"] == "pass"


if __name__ == "__main__":
    for cid in CRITERIA:
        print(_line(run_criterion(cid)))
