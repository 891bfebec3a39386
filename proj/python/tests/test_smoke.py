"""Smoke tests for the python bindings."""

import math
import os

import numpy as np
import pytest

import conekit as ck


CORPUS = os.environ.get("CONEKIT_CORPUS", "corpus")


def half_cone():
    A = np.array([[1.0, -1.0], [-1.0, -1.0]])
    b = np.zeros(2)
    return ck.SetSpec.polyhedron(A, b)


def test_distance_and_membership():
    hc = half_cone()
    assert hc.contains(np.array([1.0, 1.5]))
    assert not hc.contains(np.array([1.0, 0.5]))
    d = hc.distance(np.array([1.0, 0.0]))
    assert d.value == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
    assert d.witness == pytest.approx(np.array([0.5, 0.5]), abs=1e-9)


def test_tangent_memberships():
    hc = half_cone()
    origin = np.zeros(2)
    assert ck.tangent_membership(hc, origin, np.array([1.0, 1.0])).verdict == ck.Verdict.IN
    out = ck.tangent_membership(hc, origin, np.array([1.0, 0.0]), flavor="U")
    assert out.verdict == ck.Verdict.OUT
    assert out.limsup == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-9)


def test_oscillating_sequence_certificate():
    geo = ck.SetSpec.curve(["t"], "geomseq", 1.0, 0.5)
    sched = ck.LimitSchedule()
    sched.ratio = 0.70710678118654752
    sched.steps = 40
    one = np.array([1.0])
    zero = np.array([0.0])
    b = ck.tangent_membership(geo, zero, one, flavor="B", schedule=sched)
    u = ck.tangent_membership(geo, zero, one, flavor="U", schedule=sched)
    assert b.verdict == ck.Verdict.IN
    assert u.verdict == ck.Verdict.OUT
    assert "oscillation" in u.note


def test_punctured_map_derivatives_and_classification():
    line = ck.SetSpec.curve(["t"], "interval", -100.0, 100.0, excluded="harmonic")
    F = ck.MapSpec.restricted("x0", 1, line)
    zero = np.array([0.0])
    one = np.array([1.0])
    assert F.fiber(np.array([0.5])).describe().startswith("empty")
    d = ck.derivative_membership(F, zero, zero, one, one)
    assert d.verdict == ck.Verdict.IN
    dini = ck.dini_membership(F, zero, zero, zero, one)
    assert dini.verdict == ck.Verdict.OUT
    cls = ck.classify_differentiability(F, zero, zero)
    assert cls["proto"] == ck.Verdict.IN
    assert cls["semi"] == ck.Verdict.OUT


def test_regularity():
    mu = ck.subregularity_modulus("x0", np.zeros(1))
    assert not mu.divergent
    assert mu.value == pytest.approx(1.0, abs=1e-9)
    div = ck.subregularity_modulus("x0^2", np.zeros(1))
    assert div.divergent


def test_instance_and_suites():
    inst = ck.load_instance(os.path.join(CORPUS, "example31.inst"))
    assert inst.id == "example31"
    rep = ck.run_suite(inst, 0)
    assert rep.passed()
    assert rep.violations() == 0
    assert "mu_hat" in rep.text()


def test_cli_roundtrip():
    assert ck.run_cli(["corpus", "--all", "--dir", CORPUS]) == 0
    with pytest.raises(ck.SchemaError):
        ck.load_instance("definitely_missing.inst")
