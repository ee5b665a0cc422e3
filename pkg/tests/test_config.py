import textwrap

import pytest

from mapswarm.config import (DEFAULT_GMM, ConfigError, FailureEvent, ScenarioConfig, dump_config, dumps_config,
                             load_config, loads_config)


def test_empty_document_gives_defaults():
    cfg = loads_config("")
    assert cfg == ScenarioConfig()
    assert (cfg.m, cfg.l, cfg.r, cfg.d, cfg.epsilon, cfg.n_max, cfg.h, cfg.k) == (2000, 80, 24, 20, 0.1, 80, 20, 3)
    assert (cfg.a, cfg.b, cfg.c1, cfg.c2, cfg.s, cfg.tau, cfg.ts, cfg.gamma) == (5, 5, 0.2, 0.1, 0.2, 1, 0.01, 0.2)
    assert [g.mean for g in cfg.gmm] == [(30, 40), (-20, -20), (-80, 60)]
    assert [g.cov for g in cfg.gmm] == [((200, 0), (0, 100)), ((500, 0), (0, 200)), ((150, 0), (0, 300))]
    assert cfg.failures == (FailureEvent(10.0, 0.2),)
    assert cfg.n_steps == 2500


def test_round_trip(tmp_path):
    cfg = ScenarioConfig(seed=99, failures=(FailureEvent(3.0, 0.1), FailureEvent(12.5, 0.25)),
                         map_init_region=(-1.0, 2.0, -3.0, 4.0), convergence_tol=1e-4)
    path = tmp_path / "c.yaml"
    dump_config(cfg, path)
    assert load_config(path) == cfg
    assert loads_config(dumps_config(ScenarioConfig())) == ScenarioConfig()


def test_nested_sections_and_scientific_notation():
    text = textwrap.dedent("""\
        m: 100
        convergence_tol: 1e-4
        gmm:
          - {weight: 0.5, mean: [0, 0], cov: [[1, 0], [0, 1]]}
          - {weight: 0.5, mean: [10, 0], cov: [[2, 0.5], [0.5, 1]]}
        failures:
          - {time: 5, fraction: 0.3}
        """)
    cfg = loads_config(text)
    assert cfg.convergence_tol == 1e-4
    assert len(cfg.gmm) == 2 and cfg.gmm[1].cov == ((2.0, 0.5), (0.5, 1.0))
    assert cfg.failures == (FailureEvent(5.0, 0.3),)


def test_empty_failure_list():
    assert loads_config("failures: []").failures == ()


def test_d_not_less_than_r_rejected_with_line():
    with pytest.raises(ConfigError, match="d must be < r") as exc:
        loads_config("m: 100\nd: 30\nr: 24\n", source="x.yaml")
    assert exc.value.line == 2
    assert str(exc.value).startswith("x.yaml:2:")


@pytest.mark.parametrize("text, key", [
    ("m: 0", "m"),
    ("l: 0", "l"),
    ("r: 0\nd: 0", "r"),
    ("d: -1", "d"),
    ("d: 24", "d"),
    ("epsilon: 0", "epsilon"),
    ("gamma: 0", "gamma"),
    ("gamma: 1", "gamma"),
    ("a: 0", "a"),
    ("b: -2", "b"),
    ("c1: 0", "c1"),
    ("c2: 0", "c2"),
    ("n_max: 0", "n_max"),
    ("k: 0", "k"),
    ("m: 2\nk: 3", "k"),
    ("h: -1", "h"),
    ("s: -0.1", "s"),
    ("tau: 0", "tau"),
    ("ts: 0", "ts"),
    ("delta: 0", "delta"),
    ("horizon: -1", "horizon"),
    ("seed: -1", "seed"),
    ("convergence_tol: 0", "convergence_tol"),
    ("lloyd_max_iter: 0", "lloyd_max_iter"),
    ("lloyd_tol: 0", "lloyd_tol"),
    ("gmm: []", "gmm"),
    ("gmm:\n  - {weight: 0.5, mean: [0, 0], cov: [[1, 0], [0, 1]]}", "gmm"),
    ("gmm:\n  - {weight: 1, mean: [0, 0], cov: [[1, 2], [2, 1]]}", "gmm.0.cov"),
    ("gmm:\n  - {weight: 1, mean: [0, 0], cov: [[1, 0.1], [0, 1]]}", "gmm.0.cov"),
    ("gmm:\n  - {weight: 1, mean: [0, 0, 0], cov: [[1, 0], [0, 1]]}", "gmm.0.mean"),
    ("gmm:\n  - {weight: -1, mean: [0, 0], cov: [[1, 0], [0, 1]]}", "gmm.0.weight"),
    ("map_init_region: box", "map_init_region"),
    ("map_init_region: [1, 0, 0, 1]", "map_init_region"),
    ("map_init_velocity_box: [1, -1]", "map_init_velocity_box"),
    ("failures:\n  - {time: -1, fraction: 0.2}", "failures.0.time"),
    ("failures:\n  - {time: 1, fraction: 1.5}", "failures.0.fraction"),
    ("m: 1.5", "m"),
    ("r: abc", "r"),
    ("bogus: 1", "bogus"),
])
def test_invariant_violations(text, key):
    with pytest.raises(ConfigError) as exc:
        loads_config(text)
    assert ".".join(map(str, exc.value.key)) == key
    assert exc.value.line is not None


def test_nested_error_points_at_line():
    text = "m: 100\ngmm:\n  - weight: 1\n    mean: [0, 0]\n    cov: [[1, 2], [2, 1]]\n"
    with pytest.raises(ConfigError) as exc:
        loads_config(text)
    assert exc.value.line == 5


def test_parse_error_line():
    with pytest.raises(ConfigError, match="parse error") as exc:
        loads_config("m: 100\nr: [1, 2\n")
    assert exc.value.line is not None


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.yaml")


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError):
        loads_config("- 1\n- 2\n")


def test_direct_construction_validates():
    with pytest.raises(ConfigError, match="d must be < r"):
        ScenarioConfig(d=30.0)
    assert ScenarioConfig().replace(seed=3).seed == 3
    assert ScenarioConfig().gmm == DEFAULT_GMM


def test_derived_params():
    cfg = ScenarioConfig(r=30.0, d=10.0, c1=0.5)
    assert cfg.kernel.r == 30.0 and cfg.kernel.d == 10.0
    assert cfg.control.c1 == 0.5 and cfg.control.n_max == 80
    assert ScenarioConfig(horizon=0.0).n_steps == 0
    assert ScenarioConfig(horizon=0.015).n_steps == 2
