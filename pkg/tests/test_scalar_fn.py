"""Expression language: parsing, printing, evaluation, and step factors."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evochain.errors import EvalDomainError, ExpressionSyntaxError
from evochain.scalar_fn import ScalarFn, StepSpec, cantor2_step, evaluate, parse

# (expression, point, reference value)  -- references computed with the math
# module, independently of the tree evaluator.
CORPUS = [
    ("2 + 3*t", 4.0, 14.0),
    ("t^2", 3.0, 9.0),
    ("-t^2", 2.0, -4.0),
    ("(1 + t)^3", 1.5, 15.625),
    ("2^t", 3.0, 8.0),
    ("t/4 + 1/2", 2.0, 1.0),
    ("exp(t)", 1.0, 2.718281828459045),
    ("exp(-t/3)", 2.0, 0.513417119032592),
    ("log(1 + t)", 1.0, 0.6931471805599453),
    ("sqrt(t)", 6.25, 2.5),
    ("abs(1 - t)", 3.0, 2.0),
    ("sin(t)", 0.5, 0.479425538604203),
    ("cos(t)*sin(t)", 0.7, 0.4927248649942301),
    ("sin(t)^2 + cos(t)^2", 0.3, 1.0),
    ("1/(1 + t)", 3.0, 0.25),
    ("t*(t - 1)*(t + 1)", 2.0, 6.0),
    ("2*t - 3*t", 5.0, -5.0),
    ("-(-t)", 4.0, 4.0),
    ("10 - 2 - 3", 7.0, 5.0),
    ("12/3/2", 1.0, 2.0),
    ("2^3^2", 1.0, 512.0),
    ("2^-1", 2.0, 0.5),
    ("t^0.5", 2.25, 1.5),
    ("3.5e-1 + t", 0.0, 0.35),
    ("(t + 1)/(t - 1)", 3.0, 2.0),
    ("exp(log(t))", 5.0, 4.999999999999999),
    ("sqrt(t^2)", 3.0, 3.0),
    ("cos(0)", 9.9, 1.0),
    ("1 + 2*sin(3*t + 1)", 0.5, 2.196944288207913),
    ("t*t*t", 1.1, 1.3310000000000004),
]

# (malformed text, expected error position)
MALFORMED = [
    ("", 0),
    ("2 +", 3),
    ("* 2", 0),
    ("2 ** 3", 3),
    ("sin()", 4),
    ("sin(2", 5),
    ("(1 + 2", 6),
    ("x + 1", 0),
    ("1..2", 2),
    ("foo(2)", 0),
]


@pytest.mark.parametrize("text,x,expected", CORPUS)
def test_corpus_evaluates_to_reference(text, x, expected):
    fn = parse(text)
    assert fn(x) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    # the strict scalar path agrees on in-domain points
    assert evaluate(fn, x) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("text,x,expected", CORPUS)
def test_corpus_round_trips(text, x, expected):
    fn = parse(text)
    again = parse(fn.to_string())
    assert again == fn
    assert again(x) == fn(x)


@pytest.mark.parametrize("text,pos", MALFORMED)
def test_malformed_inputs_carry_positions(text, pos):
    with pytest.raises(ExpressionSyntaxError) as err:
        parse(text)
    assert err.value.pos == pos
    assert err.value.source == text


def test_two_numbers_is_an_error():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse("2 3")
    assert err.value.pos == 2


def test_comma_rejected_inside_call():
    with pytest.raises(ExpressionSyntaxError, match="exactly one argument"):
        parse("sin(1, 2)")


def test_vectorized_call_matches_scalar_loop():
    fn = parse("exp(-t/3)*sin(t) + t^2")
    xs = np.linspace(0.1, 7.0, 23)
    batch = fn(xs)
    assert batch.shape == xs.shape
    for x, v in zip(xs, batch):
        assert v == fn(float(x))


def test_lax_call_lets_nan_flow_while_eval_raises():
    fn = parse("log(t - 1)")
    assert math.isnan(fn(0.5))
    with pytest.raises(EvalDomainError) as err:
        fn.eval(0.5)
    assert err.value.pos == 0  # points at the log call

    div = parse("1/(t - 1)")
    assert math.isinf(div(1.0))
    with pytest.raises(EvalDomainError, match="division by zero"):
        div.eval(1.0)


def test_strict_eval_flags_fractional_power_of_negative():
    fn = parse("(t - 2)^0.5")
    with pytest.raises(EvalDomainError, match="non-integer power"):
        fn.eval(1.0)
    assert fn.eval(6.0) == pytest.approx(2.0)


def test_equality_ignores_whitespace_but_not_structure():
    assert parse("1+t") == parse("1 + t")
    assert parse("1+t") != parse("t + 1")
    assert hash(parse("2*t")) == hash(parse("2 * t"))


def test_printed_form_uses_variable_name():
    fn = parse("exp(t)/2")
    assert fn.to_string("s") == "exp(s)/2.0"  # constants print as exact float reprs
    assert fn.to_string() == "exp(t)/2.0"


_LEAVES = st.sampled_from(["t", "0", "1", "2", "2.5", "0.25", "7", "10"])
_FUNCS = st.sampled_from(["abs", "cos", "exp", "log", "sin", "sqrt"])
_OPS = st.sampled_from(["+", "-", "*", "/"])


def _combine(children):
    kind, payload = children
    if kind == "neg":
        return f"-({payload[0]})"
    if kind == "call":
        return f"{payload[0]}({payload[1]})"
    return f"({payload[0]}) {payload[1]} ({payload[2]})"


_EXPRESSIONS = st.recursive(
    _LEAVES,
    lambda inner: st.one_of(
        st.tuples(st.just("neg"), st.tuples(inner)).map(_combine),
        st.tuples(st.just("call"), st.tuples(_FUNCS, inner)).map(_combine),
        st.tuples(st.just("binop"), st.tuples(inner, _OPS, inner)).map(_combine),
    ),
    max_leaves=20,
)


@settings(max_examples=200, deadline=None)
@given(_EXPRESSIONS)
def test_print_parse_is_identity_on_trees(text):
    fn = parse(text)
    assert parse(fn.to_string()) == fn


# --- step factors -----------------------------------------------------------


def test_step_values_are_exact_and_right_open():
    spec = StepSpec(5.0)
    assert cantor2_step(spec, 0.0, 4.999999) == 1.0
    assert cantor2_step(spec, 0.0, 5.0) == 0.0  # boundary belongs to the off side
    assert cantor2_step(spec, 6.0, 7.0) == 0.0


def test_step_composition_identity_exact():
    spec = StepSpec(2.5)
    pts = np.linspace(0.0, 5.0, 41)
    for s in pts:
        for tau in pts[pts >= s]:
            for t in pts[pts >= tau]:
                left = cantor2_step(spec, s, tau) * cantor2_step(spec, tau, t)
                assert left == cantor2_step(spec, s, t)


def test_step_rejects_disordered_pairs():
    spec = StepSpec(1.0)
    with pytest.raises(EvalDomainError):
        cantor2_step(spec, 2.0, 1.0)
    with pytest.raises(ValueError):
        StepSpec(0.0)


def test_scalarfn_parse_is_the_module_parse():
    assert ScalarFn.parse("t + 1") == parse("t + 1")
