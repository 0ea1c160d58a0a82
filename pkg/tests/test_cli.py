import pytest

from stalemix.channel import NoiseModel
from stalemix.cli import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_IO,
    EXIT_OK,
    main,
)
from stalemix.config import (
    apply_overrides,
    load_config,
    parse_config,
    serialize_config,
)
from stalemix.dataset import load_dataset
from stalemix.errors import ConfigError

BASE_INI = """
[dataset]
dim = 4
num_clients = 3
examples_per_client = 8
target_margin = 0.2
radius = 1.0
seed = 7

[profile]
weights = 0.5, 0.3, 0.2

[schedule]
kind = bernoulli_uniform
tau_dl = 1
tau_ul = 1
participation_prob = 0.7
fresh_prob = 0.4

[noise]
family = gaussian_isotropic
sigma2_dl = 0.0
sigma2_ul = 0.0

[run]
horizon = 120
seed = 3
reps = 4

[sweep]
profiles = 1.0, 0.0, 0.0 ; 0.2, 0.3, 0.5
noise_energies = 0, 0.2
horizons = 40, 120
"""


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(BASE_INI)
    return path


def test_config_roundtrip():
    cfg = parse_config(BASE_INI)
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_config_roundtrip_with_script(tmp_path):
    script = tmp_path / "sched.txt"
    script.write_text("0 0 0 0\n3 1 1 1\n")
    text = BASE_INI.replace("kind = bernoulli_uniform", "kind = scripted").replace(
        "fresh_prob = 0.4", f"fresh_prob = 0.4\nscript = {script}"
    )
    cfg = parse_config(text)
    assert cfg.run.policy.kind == "scripted"
    assert len(cfg.run.policy.script) == 2
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config(BASE_INI + "\n[dataset2]\nx = 1\n")
    with pytest.raises(ConfigError):
        parse_config(BASE_INI.replace("dim = 4", "dim = 4\ntypo_key = 3"))
    with pytest.raises(ConfigError):
        parse_config(BASE_INI.replace("dim = 4", "dim = four"))


def test_config_defaults_minimal():
    cfg = parse_config("[run]\nhorizon = 10\n")
    assert cfg.run.policy.kind == "always_fresh"
    assert cfg.run.profile == (1.0,)
    assert cfg.run.noise == NoiseModel()
    assert cfg.sweep_profiles == ()


def test_apply_overrides():
    cfg = parse_config(BASE_INI)
    out = apply_overrides(cfg, seed=99, reps=11)
    assert out.run.seed == 99 and out.run.reps == 11
    assert apply_overrides(cfg) is cfg


def test_gen_data_roundtrip_and_determinism(tmp_path, ini):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["gen-data", "--config", str(ini), "--out", str(out_a)]) == EXIT_OK
    assert main(["gen-data", "--config", str(ini), "--out", str(out_b)]) == EXIT_OK
    assert (out_a / "dataset.txt").read_bytes() == (out_b / "dataset.txt").read_bytes()
    ds = load_dataset(out_a / "dataset.txt")
    assert ds.num_clients == 3
    assert ds.certified_margin >= 0.2


def test_gen_data_rejects_bad_margin(tmp_path, ini):
    bad = tmp_path / "bad.ini"
    bad.write_text(BASE_INI.replace("target_margin = 0.2", "target_margin = 1.5"))
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_run_noiseless_passes(tmp_path, ini, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    captured = capsys.readouterr().out
    assert "check local_progress: PASS" in captured
    assert "check potential_steps: PASS" in captured
    assert (out / "trace.csv").exists()
    assert (out / "summary.csv").exists()
    assert (out / "config.ini").exists()
    # the echoed config re-parses to the same experiment
    echoed = load_config(out / "config.ini")
    assert echoed == parse_config(BASE_INI)
    header = (out / "summary.csv").read_text().splitlines()[0]
    assert header == "A,mean_KA,se_KA,bound_thm1,mean_Thit,mean_Tstab,censored_frac"


def test_run_corruption_flag(tmp_path, ini, capsys):
    out = tmp_path / "run"
    code = main(["run", "--config", str(ini), "--out", str(out), "--corrupt-round", "110"])
    captured = capsys.readouterr().out
    assert code == EXIT_INVARIANT
    assert "flagged rounds [110]" in captured
    assert "check corruption_detected: PASS" in captured


def test_run_noisy_statistical_verdicts(tmp_path, capsys):
    text = BASE_INI.replace("sigma2_dl = 0.0", "sigma2_dl = 0.05").replace(
        "sigma2_ul = 0.0", "sigma2_ul = 0.05"
    ).replace("reps = 4", "reps = 20")
    ini = tmp_path / "noisy.ini"
    ini.write_text(text)
    out = tmp_path / "run"
    assert main(["run", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    captured = capsys.readouterr().out
    assert "check expected_bound: PASS" in captured
    assert "check recursion_residuals: PASS" in captured


def test_run_trace_bytes_identical(tmp_path, ini):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(ini), "--out", str(out_a)]) == EXIT_OK
    assert main(["run", "--config", str(ini), "--out", str(out_b)]) == EXIT_OK
    assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()


def test_run_jobs_do_not_change_output(tmp_path, ini):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(ini), "--out", str(out_a), "--jobs", "1"]) == EXIT_OK
    assert main(["run", "--config", str(ini), "--out", str(out_b), "--jobs", "4"]) == EXIT_OK
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()
    assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()


def test_sweep_row_count(tmp_path, ini):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(ini), "--out", str(out), "--reps", "3"]) == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "profile,s_bar,V,A,mean_KA,se_KA,bound_thm1"
    assert len(lines) - 1 == 2 * 2 * 2  # profiles x noise energies x horizons


def test_sweep_single_cell_matches_run_summary(tmp_path):
    text = BASE_INI.replace(
        "profiles = 1.0, 0.0, 0.0 ; 0.2, 0.3, 0.5", "profiles = 0.5, 0.3, 0.2"
    ).replace("noise_energies = 0, 0.2", "noise_energies = 0")
    ini = tmp_path / "one.ini"
    ini.write_text(text)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    rows = (out / "sweep.csv").read_text().splitlines()[1:]
    assert len(rows) == 2
    # compare against a direct run at the same horizons
    cfg = parse_config(text)
    from stalemix.engine import monte_carlo
    from dataclasses import replace

    summary = monte_carlo(
        replace(cfg.run, noise=NoiseModel(), horizon=120, checkpoints=(40, 120))
    )
    for row, i in zip(rows, range(2)):
        fields = row.split(",")
        assert float(fields[4]) == pytest.approx(float(summary.mean_cum[i]))


def test_profile_design_command(capsys):
    assert main(["profile-design", "--frequencies", "0.9,0.1,0.9"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "weights: 1.0, 0.0, 0.0" in out
    assert main(["profile-design", "--frequencies", "0.1,0.9,0.9"]) == EXIT_OK
    assert "weights: 0.0, 1.0, 0.0" in capsys.readouterr().out
    assert main(["profile-design", "--frequencies", "0.1,0.2,0.1"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "falling back to the uniform profile" in captured.err


def test_exit_codes(tmp_path, ini):
    # missing config file -> I/O error
    assert main(["run", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == EXIT_IO
    # malformed config -> config error
    bad = tmp_path / "bad.ini"
    bad.write_text("[profile]\nweights = 0.9, 0.9\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_env_overrides(tmp_path, ini, monkeypatch):
    out = tmp_path / "enved"
    monkeypatch.setenv("STALEMIX_OUT", str(out))
    monkeypatch.setenv("STALEMIX_SEED", "31")
    assert main(["gen-data", "--config", str(ini)]) == EXIT_OK
    assert (out / "dataset.txt").exists()
    # seed env var changes the run seed, not the dataset seed
    cfg = apply_overrides(load_config(ini), seed=31)
    assert cfg.run.seed == 31
    assert cfg.run.data.seed == 7


def test_self_test(capsys):
    assert main(["self-test"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
