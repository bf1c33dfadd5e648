"""The inequality battery and its standalone checks."""

import functools
import json
import math
import operator

import numpy as np
import pytest

import qw1.lab as lab
from qw1.errors import InvalidInput, QW1Error
from qw1.lab import (
    BatteryReport,
    CheckResult,
    check_entropy_continuity,
    check_marton,
    check_pinsker,
    concentration_mgf,
    entropy_modulus,
    run_battery,
    spectral_tail,
)
from qw1.operators import (
    HermitianOperator,
    QuditLayout,
    basis_state,
    embed_operator,
    maximally_entangled,
    maximally_mixed,
)

SZ = np.diag([1.0, -1.0]).astype(complex)


def _z_sum(n):
    lay = QuditLayout(2, n)
    one = HermitianOperator(QuditLayout(2, 1), SZ)
    return functools.reduce(
        operator.add, (embed_operator(one, lay, [i]) for i in range(1, n + 1)))


def test_check_result_pass_boundary():
    assert CheckResult("x", 1.0, 1.0, {}).passed
    assert CheckResult("x", 1.0 + 1.9e-7, 1.0, {}).passed
    assert not CheckResult("x", 1.0 + 2.1e-7, 1.0, {}).passed
    assert CheckResult("x", 5.0, math.inf, {}).passed
    r = CheckResult("x", 0.25, 1.0, {"k": 1}, ("tag",))
    assert r.margin == 0.75
    payload = r.to_json()
    assert payload["passed"] is True
    assert payload["flags"] == ["tag"]
    json.dumps(payload)  # nothing numpy-flavored left inside


def test_to_json_handles_infinities():
    r = CheckResult("x", 1.0, math.inf, {})
    assert r.to_json()["rhs"] == "inf"
    assert r.to_json()["margin"] == "inf"


def test_entropy_modulus_values():
    assert entropy_modulus(0.0) == 0.0
    assert entropy_modulus(-1.0) == 0.0
    assert abs(entropy_modulus(0.5) - 0.9547712524422192) < 1e-15
    assert abs(entropy_modulus(1.0) - 2 * math.log(2)) < 1e-15


def test_entropy_continuity_worked_instance():
    lay = QuditLayout(2, 1)
    res = check_entropy_continuity(basis_state(lay, [0]), maximally_mixed(lay))
    assert abs(res.lhs - math.log(2)) < 1e-9
    assert abs(res.rhs - 1.6479184330021646) < 1e-7
    assert res.passed


def test_pinsker_and_infinite_relative_entropy():
    lay = QuditLayout(2, 1)
    res = check_pinsker(basis_state(lay, [0]), maximally_mixed(lay))
    assert res.passed
    assert abs(res.lhs - 1.0) < 1e-12
    assert abs(res.rhs - math.sqrt(2 * math.log(2))) < 1e-12
    # orthogonal supports: vacuous bound, flagged as such
    res = check_pinsker(basis_state(lay, [0]), basis_state(lay, [1]))
    assert res.passed
    assert math.isinf(res.rhs)
    assert "infinite-relative-entropy" in res.flags


def test_marton_entangled_pair_instance():
    lay1 = QuditLayout(2, 1)
    gamma = maximally_entangled(2)
    res = check_marton(gamma, [maximally_mixed(lay1), maximally_mixed(lay1)])
    assert abs(res.lhs - 0.75) < 1e-6
    assert abs(res.rhs - math.sqrt(2 * math.log(2))) < 1e-9
    assert res.passed


def test_marton_rejects_mismatched_factors():
    lay1 = QuditLayout(2, 1)
    with pytest.raises(InvalidInput):
        check_marton(maximally_mixed(QuditLayout(2, 3)),
                     [maximally_mixed(lay1), maximally_mixed(lay1)])


def test_concentration_mgf_z_sum():
    h = _z_sum(3)
    res = concentration_mgf(h, 1.0)
    assert abs(res.lhs - math.cosh(1.0) ** 3) < 1e-9
    assert abs(res.rhs - math.exp(1.5)) < 1e-6
    assert res.passed
    res = concentration_mgf(h, 0.5)
    assert abs(res.lhs - math.cosh(0.5) ** 3) < 1e-9
    assert abs(res.rhs - math.exp(0.375)) < 1e-6
    assert res.passed
    assert res.instance["t"] == 0.5


def test_spectral_tail_z_sum():
    h = _z_sum(4)
    res = spectral_tail(h, 1.0)
    assert res.lhs == 1.0          # only the all-up state reaches mean + 2 sqrt(4)
    assert abs(res.rhs - 16 * math.exp(-2.0)) < 1e-12
    assert res.passed
    res = spectral_tail(h, 0.0)
    assert res.lhs == 11.0         # eigenvalues >= 0: multiplicities 6 + 4 + 1
    assert res.rhs == 16.0
    with pytest.raises(InvalidInput):
        spectral_tail(h, -0.5)


def test_battery_trials_zero_is_empty_pass():
    rep = run_battery(seed=1, trials=0)
    assert rep.results == []
    assert rep.missing == ()
    assert rep.passed


def test_battery_small_run_covers_and_repeats():
    rep = run_battery(seed=7, trials=2)
    assert rep.missing == ()
    assert rep.failures == []
    assert rep.passed
    again = run_battery(seed=7, trials=2)
    assert rep.to_json_lines() == again.to_json_lines()
    summary = rep.summary()
    assert summary["passed"] is True
    assert summary["total"] == len(rep.results)
    # every emitted line parses back
    for line in rep.to_json_lines().splitlines():
        json.loads(line)


def test_battery_only_filter():
    rep = run_battery(seed=3, trials=1, only={"pinsker", "classical-duality"})
    names = {r.name for r in rep.results}
    assert names == {"pinsker", "classical-duality"}
    assert rep.missing == ()
    assert rep.passed


def test_battery_validation():
    with pytest.raises(InvalidInput):
        run_battery(seed=-1, trials=1)
    with pytest.raises(InvalidInput):
        run_battery(trials=-2)
    with pytest.raises(InvalidInput):
        run_battery(trials=1, layouts=())


def test_report_with_missing_names_fails():
    rep = BatteryReport(seed=0, trials=1, layouts=(QuditLayout(2, 1),),
                        results=[], missing=("duality-gap",))
    assert not rep.passed
    assert rep.summary()["missing"] == ["duality-gap"]


def test_family_exception_becomes_failing_result(monkeypatch):
    def boom(seed, fam, k, layouts, options):
        raise InvalidInput("synthetic breakage")

    monkeypatch.setattr(lab, "_FAMILIES", (("duality-gap", "light", boom),))
    rep = run_battery(seed=0, trials=1, only={"duality-gap"})
    assert len(rep.results) == 1
    r = rep.results[0]
    assert "exception" in r.flags
    assert not r.passed
    assert not rep.passed
    assert "synthetic breakage" in r.instance["error"]


def test_non_library_errors_propagate(monkeypatch):
    def broken(seed, fam, k, layouts, options):
        raise ValueError("not a library error")

    monkeypatch.setattr(lab, "_FAMILIES", (("duality-gap", "light", broken),))
    with pytest.raises(ValueError):
        run_battery(seed=0, trials=1, only={"duality-gap"})
