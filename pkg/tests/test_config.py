from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcont import config
from mqcont.config import ConfigError, Discretization, RunConfig

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-3, 50.0, allow_nan=False)


@st.composite
def run_configs(draw):
    dist = draw(st.sampled_from(["uniform", "adapted"]))
    disc = Discretization(
        Ns=draw(st.integers(3, 12)),
        distribution=dist,
        h1=draw(st.floats(0.05, 0.5)) if dist == "adapted" else None,
        s=draw(positive),
    )
    cont = {}
    if draw(st.booleans()):
        lo = draw(finite)
        cont["alpha_range"] = (lo, lo + draw(positive))
    if draw(st.booleans()):
        cont["ds_initial"] = draw(positive)
    if draw(st.booleans()):
        cont["detect"] = tuple(draw(st.lists(st.sampled_from(["fold", "branch", "hopf"]), min_size=1, unique=True)))
    if draw(st.booleans()):
        cont["max_steps"] = draw(st.integers(1, 5000))
    return RunConfig(
        problem="bratu_1d",
        params={"lam": draw(finite)},
        discretization=disc,
        mode=draw(st.sampled_from(["eigen", "continue"])),
        eigen_count=draw(st.integers(1, 8)),
        continuation=cont,
        output_dir=draw(st.sampled_from(["out", "results/run1"])),
        name=draw(st.sampled_from(["run", "bratu_a"])),
        plot=draw(st.booleans()),
        verify_jacobians=draw(st.booleans()),
    )


@settings(max_examples=200, deadline=None)
@given(run_configs())
def test_round_trip(cfg):
    assert config.loads(config.dumps(cfg)) == cfg


def test_example_file():
    text = """
    # 1D Bratu with adapted nodes
    problem.id = bratu_1d
    discretization.preset = table2_nu_K9
    continuation.alpha_range = 0, 4
    continuation.detect = fold
    output.plot = false
    """
    cfg = config.loads(text)
    assert cfg.discretization.Ns == 10 and cfg.discretization.distribution == "adapted"
    assert cfg.continuation == {"alpha_range": (0.0, 4.0), "detect": ("fold",)}
    assert cfg.plot is False


def test_explicit_keys_override_preset():
    cfg = config.loads("problem.id = bratu_1d\ndiscretization.preset = table2_nu_K9\ndiscretization.s = 3.5\n")
    assert cfg.discretization.s == 3.5


@pytest.mark.parametrize(
    "text",
    [
        "discretization.Ns = 10\n",
        "problem.id = heat\n",
        "problem.id = bratu_1d\nmode = optimize\n",
        "problem.id = bratu_1d\ncontinuation.speed = 2\n",
        "problem.id = bratu_1d\ndiscretization.Ns = ten\n",
        "problem.id = bratu_1d\nproblem.id = bratu_2d\n",
        "problem.id = bratu_1d\ndiscretization.distribution = adapted\n",
        "problem.id = bratu_1d\ndiscretization.preset = nope\n",
        "problem.id = bratu_1d\nproblem.mu = 1\n",
        "problem.id = bratu_1d\njust words\n",
        "problem.id = brusselator_1d\nproblem.a = -2\n",
        "problem.id = bratu_1d\nmode = table\ntable.name = table99\n",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        config.loads(text)


def test_settings_defaults_and_overrides():
    cfg = RunConfig(problem="bratu_1d", continuation={"ds_initial": 0.01})
    st_ = cfg.settings((0.0, 4.0), ("fold",), 5.0)
    assert st_.alpha_range == (0.0, 4.0) and st_.detect == ("fold",) and st_.u_max == 5.0
    assert st_.ds_initial == 0.01
    st2 = replace(cfg, verify_jacobians=True).settings((0.0, 1.0), ())
    assert st2.verify_jacobians
