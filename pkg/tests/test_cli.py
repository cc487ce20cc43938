import json
import math

import numpy as np
import pytest

from oulevy import BoundedLipschitz, Constant
from oulevy.cli import UsageError, load_config, main


def run_cli(capsys, argv: list[str]) -> tuple[int, str]:
    code = main(argv)
    return code, capsys.readouterr().out


def custom_ini(tmp_path, body: str):
    path = tmp_path / "exp.ini"
    path.write_text(body)
    return str(path)


CUSTOM = """
[model]
family = custom
q = 1,4
lam = 1,2
sigma = 1,1

[levy]
family = constant
c = 1

[run]
seed = 5
replicas = 2000
times = 1,2,4
x = 1
y = -1
"""


def test_load_config_gaussian_preset() -> None:
    cfg = load_config("gaussian52-small")
    assert cfg.model.n_modes == 8
    assert np.allclose(cfg.model.q, np.arange(1, 9, dtype=float) ** 2)
    assert np.allclose(cfg.model.lam, np.arange(1, 9, dtype=float))
    assert isinstance(cfg.spec.rho0, Constant)
    assert cfg.shape == {"delta": 1.0, "d": 2}
    assert cfg.seed == 42
    assert cfg.times == (4.0, 8.0, 16.0, 32.0, 64.0)
    assert cfg.x[0] == 2.0 and not np.any(cfg.x[1:])
    assert cfg.bounds == ("coupling_ii",)


def test_load_config_z3_preset() -> None:
    cfg = load_config("z3-exponential")
    assert cfg.model.n_modes == 4
    assert np.allclose(cfg.model.lam, [1.0, 2.0, 3.0, 4.0])
    assert isinstance(cfg.spec.rho0, BoundedLipschitz)
    assert not cfg.shape
    assert cfg.bounds == ("coupling_ii", "exponential_z3")


def test_load_config_custom_file(tmp_path) -> None:
    cfg = load_config(custom_ini(tmp_path, CUSTOM))
    assert cfg.model.n_modes == 2
    assert np.allclose(cfg.model.q, [1.0, 4.0])
    assert cfg.seed == 5 and cfg.replicas == 2000
    assert np.allclose(cfg.x, [1.0, 0.0])
    assert np.allclose(cfg.y, [-1.0, 0.0])
    assert cfg.outdir is None


def test_load_config_errors(tmp_path) -> None:
    with pytest.raises(UsageError):
        load_config("no-such-preset")
    with pytest.raises(UsageError):
        load_config(custom_ini(tmp_path, CUSTOM.replace("times = 1,2,4",
                                                        "times = 4,2,1")))
    with pytest.raises(UsageError):
        load_config(custom_ini(tmp_path, CUSTOM.replace("x = 1", "x = 1,2,3")))
    with pytest.raises(UsageError):
        load_config(custom_ini(tmp_path, CUSTOM + "bounds = sideways\n"))


def test_verify_single_suite_report(capsys) -> None:
    code, out = run_cli(capsys, ["verify", "cm", "--seed", "3",
                                 "--replicas", "5000"])
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "verify"
    assert report["seed"] == 3
    assert report["pass"] is True
    checks = report["suites"]["cm"]
    assert checks
    for chk in checks:
        assert set(chk) == {"name", "statistic", "threshold", "pass"}
        assert chk["pass"] is True


def test_verify_all_suites_pass(capsys) -> None:
    code, out = run_cli(capsys, ["verify", "all", "--seed", "1",
                                 "--replicas", "2000"])
    assert code == 0
    report = json.loads(out)
    assert sorted(report["suites"]) == ["cm", "decomposition", "gradient",
                                        "lemma31", "mecke", "mineka"]
    assert report["pass"] is True


def test_verify_mineka_needs_replicas(capsys) -> None:
    code, _ = run_cli(capsys, ["verify", "mineka", "--seed", "1",
                               "--replicas", "500"])
    assert code == 2


def test_unknown_config_is_usage_error(capsys) -> None:
    code, _ = run_cli(capsys, ["tv-decay", "--config", "missing.ini",
                               "--seed", "1"])
    assert code == 2


def test_missing_seed_is_usage_error(capsys, tmp_path) -> None:
    body = CUSTOM.replace("seed = 5\n", "")
    code, _ = run_cli(capsys, ["tv-decay", "--config",
                               custom_ini(tmp_path, body)])
    assert code == 2


def test_seed_flag_validation() -> None:
    with pytest.raises(SystemExit) as exc:
        main(["verify", "cm", "--seed", "-1"])
    assert exc.value.code == 2


def test_tv_decay_table_shape(capsys, tmp_path) -> None:
    out1 = tmp_path / "a"
    code, printed = run_cli(capsys, ["tv-decay", "--seed", "7",
                                     "--replicas", "2000",
                                     "--out", str(out1)])
    assert code == 0
    path = out1 / "tv_decay.csv"
    assert str(path) in printed
    lines = path.read_text().splitlines()
    assert lines[0] == "t,tv_projection,tv_stderr,tv_coupling_upper,bound_coupling1,seed"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert float(first[0]) == 4.0
    assert first[-1] == "7"
    values = [float(row.split(",")[1]) for row in lines[1:]]
    assert all(0.0 <= v <= 2.0 for v in values)


def test_tv_decay_z3_column(capsys, tmp_path) -> None:
    code, _ = run_cli(capsys, ["tv-decay", "--config", "z3-exponential",
                               "--seed", "7", "--replicas", "2000",
                               "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "tv_decay.csv").read_text().splitlines()
    assert lines[0] == ("t,tv_projection,tv_stderr,tv_coupling_upper,"
                        "bound_coupling1,bound_z3,seed")
    assert len(lines) == 5
    for row in lines[1:]:
        cells = row.split(",")
        assert float(cells[4]) >= 0.0 and float(cells[5]) >= 0.0


def test_tv_decay_identical_start_all_zero(capsys, tmp_path) -> None:
    body = CUSTOM.replace("y = -1", "y = 1")
    code, _ = run_cli(capsys, ["tv-decay", "--config",
                               custom_ini(tmp_path, body),
                               "--out", str(tmp_path / "o")])
    assert code == 0
    lines = (tmp_path / "o" / "tv_decay.csv").read_text().splitlines()
    for row in lines[1:]:
        cells = row.split(",")
        assert all(float(c) == 0.0 for c in cells[1:5])


def test_tv_decay_reruns_byte_identical(capsys, tmp_path) -> None:
    argv = ["tv-decay", "--seed", "7", "--replicas", "2000"]
    run_cli(capsys, argv + ["--out", str(tmp_path / "r1")])
    run_cli(capsys, argv + ["--out", str(tmp_path / "r2")])
    b1 = (tmp_path / "r1" / "tv_decay.csv").read_bytes()
    b2 = (tmp_path / "r2" / "tv_decay.csv").read_bytes()
    assert b1 == b2


def test_tv_decay_thread_count_does_not_change_bytes(capsys, tmp_path,
                                                     monkeypatch) -> None:
    argv = ["tv-decay", "--seed", "7", "--replicas", "2000"]
    run_cli(capsys, argv + ["--out", str(tmp_path / "one"), "--threads", "1"])
    monkeypatch.setenv("OU_LEVY_THREADS", "4")
    run_cli(capsys, argv + ["--out", str(tmp_path / "four")])
    b1 = (tmp_path / "one" / "tv_decay.csv").read_bytes()
    b2 = (tmp_path / "four" / "tv_decay.csv").read_bytes()
    assert b1 == b2


def test_bad_thread_env_is_usage_error(capsys, monkeypatch) -> None:
    monkeypatch.setenv("OU_LEVY_THREADS", "many")
    code, _ = run_cli(capsys, ["verify", "cm", "--seed", "1",
                               "--replicas", "2000"])
    assert code == 2


def test_tv_decay_replica_floor(capsys) -> None:
    code, _ = run_cli(capsys, ["tv-decay", "--seed", "1", "--replicas", "500"])
    assert code == 2


def test_bounds_table(capsys, tmp_path) -> None:
    code, printed = run_cli(capsys, ["bounds", "--config", "z3-exponential",
                                     "--seed", "7", "--replicas", "2000",
                                     "--out", str(tmp_path)])
    assert code == 0
    path = tmp_path / "bounds.csv"
    assert str(path) in printed
    lines = path.read_text().splitlines()
    assert lines[0] == "t,kind,value,params_json"
    assert len(lines) == 1 + 2 * 4
    kinds = set()
    for row in lines[1:]:
        t_str, kind, value, pjson = row.split(",", maxsplit=3)
        kinds.add(kind)
        assert float(value) >= 0.0
        params = json.loads(pjson.strip('"').replace('""', '"'))
        assert "C" in params and "dist" in params
        if kind == "coupling_ii":
            assert len(params["delta_values"]) == 21
        else:
            assert math.isclose(params["lam"], 1.0)
    assert kinds == {"coupling_ii", "exponential_z3"}


def test_couple_trace_schema_and_file(capsys, tmp_path) -> None:
    code, printed = run_cli(capsys, ["couple-trace", "--seed", "11",
                                     "--replicas", "5",
                                     "--out", str(tmp_path)])
    assert code == 0
    lines = printed.strip().splitlines()
    assert len(lines) == 5
    for line in lines:
        obj = json.loads(line)
        assert sorted(obj) == ["a", "coupled", "dU", "t_couple", "times"]
    saved = (tmp_path / "couple_trace.jsonl").read_text().strip().splitlines()
    assert saved == lines
