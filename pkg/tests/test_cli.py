import pytest
import yaml
from click.testing import CliRunner

import mobicache as mc
from mobicache.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, mapping):
    path.write_text(yaml.safe_dump(mapping))
    return str(path)


def single_cell_mapping():
    return {
        "schema_version": 1,
        "library": {"file_count": 2, "popularity": [0.7, 0.3]},
        "network": {"grid": [1, 1], "rate": 0.5, "capacity": 1.0},
        "mobility": {"stay_prob": 1.0},
        "deadline": {"slots": 2},
    }


def chain_mapping(**extra):
    mapping = {
        "schema_version": 1,
        "library": {"file_count": 4, "zipf_exponent": 0.8},
        "network": {"grid": [2, 1], "rate": 0.5, "capacity": 2.0},
        "mobility": {"stay_prob": 0.5},
        "deadline": {"slots": 2},
    }
    mapping.update(extra)
    return mapping


@pytest.fixture
def single_cell_config(tmp_path):
    return write_config(tmp_path / "single.yaml", single_cell_mapping())


@pytest.fixture
def chain_config(tmp_path):
    return write_config(tmp_path / "chain.yaml", chain_mapping())


class TestPathsCommand:
    def test_exact_csv_on_stdout(self, runner, chain_config):
        result = runner.invoke(main, ["paths", "--config", chain_config])
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "path,q,s_1,s_2"
        assert lines[1] == "1-1,0.25,2.0,0.0"
        assert len(lines) == 5

    def test_out_writes_file(self, runner, chain_config, tmp_path):
        out = tmp_path / "paths.csv"
        result = runner.invoke(
            main, ["paths", "--config", chain_config, "--out", str(out)])
        assert result.exit_code == 0
        assert result.stdout == ""
        assert out.read_text().startswith("path,q,")

    def test_seed_switches_sample(self, runner, tmp_path):
        config = write_config(
            tmp_path / "sampled.yaml",
            chain_mapping(mobility={"stay_prob": 0.5, "ensemble": "sampled",
                                    "sample_count": 40}))
        one = runner.invoke(main, ["paths", "--config", config, "--seed", "1"])
        two = runner.invoke(main, ["paths", "--config", config, "--seed", "2"])
        rerun = runner.invoke(main,
                              ["paths", "--config", config, "--seed", "1"])
        assert one.stdout == rerun.stdout
        assert one.stdout != two.stdout

    def test_missing_config_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main, ["paths", "--config", str(tmp_path / "nope.yaml")])
        assert result.exit_code == 2
        assert "cannot read" in result.stderr


class TestSolveCommand:
    def test_gamma_single_cell(self, runner, single_cell_config):
        result = runner.invoke(
            main, ["solve", "--config", single_cell_config,
                   "--policy", "gamma"])
        assert result.exit_code == 0
        policy = mc.CachingPolicy.from_csv(result.stdout)
        assert policy.x.tolist() == [[1.0, 0.0]]

    @pytest.mark.parametrize(
        "name", ["gamma", "gamma_at_tmin", "greedy", "popular"])
    def test_all_policies_run(self, runner, chain_config, name):
        result = runner.invoke(
            main, ["solve", "--config", chain_config, "--policy", name])
        assert result.exit_code == 0
        policy = mc.CachingPolicy.from_csv(result.stdout)
        assert policy.x.shape == (2, 4)

    def test_unknown_policy_rejected_by_click(self, runner,
                                              single_cell_config):
        result = runner.invoke(
            main, ["solve", "--config", single_cell_config,
                   "--policy", "alphabetical"])
        assert result.exit_code == 2

    def test_invalid_config_exits_2(self, runner, tmp_path):
        mapping = single_cell_mapping()
        mapping["library"]["zipf_exponent"] = 0.8  # two popularity sources
        config = write_config(tmp_path / "bad.yaml", mapping)
        result = runner.invoke(
            main, ["solve", "--config", config, "--policy", "gamma"])
        assert result.exit_code == 2
        assert "error:" in result.stderr


class TestEvaluateCommand:
    def test_round_trip_with_solve(self, runner, chain_config, tmp_path):
        policy_path = tmp_path / "gamma.csv"
        solve = runner.invoke(
            main, ["solve", "--config", chain_config, "--policy", "gamma",
                   "--out", str(policy_path)])
        assert solve.exit_code == 0
        result = runner.invoke(
            main, ["evaluate", "--config", chain_config,
                   "--policy-file", str(policy_path)])
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "scenario,policy,d_av_norm"
        scenario_id, policy_name, value = lines[1].split(",")
        assert scenario_id == "chain"
        assert policy_name == "gamma"
        assert 0.0 <= float(value) <= 1.0

    def test_zero_policy_scores_one(self, runner, single_cell_config,
                                    tmp_path):
        policy_path = tmp_path / "empty.csv"
        policy_path.write_text(mc.CachingPolicy.zeros(1, 2).to_csv())
        result = runner.invoke(
            main, ["evaluate", "--config", single_cell_config,
                   "--policy-file", str(policy_path)])
        assert result.exit_code == 0
        assert result.stdout.splitlines()[1] == "single,empty,1.0"

    def test_missing_policy_file_exits_2(self, runner, single_cell_config,
                                         tmp_path):
        result = runner.invoke(
            main, ["evaluate", "--config", single_cell_config,
                   "--policy-file", str(tmp_path / "ghost.csv")])
        assert result.exit_code == 2
        assert "not found" in result.stderr


class TestSweepCommand:
    def test_config_sweep(self, runner, tmp_path):
        mapping = chain_mapping(
            sweep={"axis": "deadline", "values": [2, 3],
                   "policies": ["gamma", "most_popular"]})
        config = write_config(tmp_path / "sweep.yaml", mapping)
        result = runner.invoke(main, ["sweep", "--config", config])
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0].startswith("sweep_axis,sweep_value,policy")
        assert len(lines) == 5
        assert all(line.endswith(",") for line in lines[1:])

    def test_timings_fill_wall_column(self, runner, tmp_path):
        mapping = chain_mapping(
            sweep={"axis": "deadline", "values": [2],
                   "policies": ["gamma"]})
        config = write_config(tmp_path / "sweep.yaml", mapping)
        result = runner.invoke(main,
                               ["sweep", "--config", config, "--timings"])
        assert result.exit_code == 0
        wall = result.stdout.splitlines()[1].rsplit(",", 1)[1]
        assert wall != ""
        assert int(wall) >= 0

    def test_requires_exactly_one_source(self, runner, tmp_path):
        neither = runner.invoke(main, ["sweep"])
        assert neither.exit_code == 2
        assert "exactly one" in neither.stderr
        config = write_config(tmp_path / "s.yaml", chain_mapping())
        both = runner.invoke(
            main, ["sweep", "--config", config, "--scale", "small"])
        assert both.exit_code == 2

    def test_missing_sweep_section_exits_2(self, runner, chain_config):
        result = runner.invoke(main, ["sweep", "--config", chain_config])
        assert result.exit_code == 2

    def test_budget_exceeded_exits_3(self, runner, tmp_path):
        mapping = chain_mapping(
            sweep={"axis": "deadline", "values": [30],
                   "policies": ["gamma"]})
        config = write_config(tmp_path / "sweep.yaml", mapping)
        result = runner.invoke(main, ["sweep", "--config", config])
        assert result.exit_code == 3
        assert "sample" in result.stderr


class TestExportLpCommand:
    def test_lp_text_on_stdout(self, runner, single_cell_config):
        result = runner.invoke(
            main, ["export-lp", "--config", single_cell_config])
        assert result.exit_code == 0
        assert result.stdout.startswith("Minimize\n")
        assert result.stdout.rstrip().endswith("End")

    def test_out_writes_file(self, runner, single_cell_config, tmp_path):
        out = tmp_path / "program.lp"
        result = runner.invoke(
            main, ["export-lp", "--config", single_cell_config,
                   "--out", str(out)])
        assert result.exit_code == 0
        assert out.read_text().startswith("Minimize\n")


class TestOracleCommand:
    def test_csv_stdout_objective_stderr(self, runner, single_cell_config):
        result = runner.invoke(main,
                               ["oracle", "--config", single_cell_config])
        assert result.exit_code == 0
        policy = mc.CachingPolicy.from_csv(result.stdout)
        assert policy.x.tolist() == [[1.0, 0.0]]
        assert "d_av_norm=0.3" in result.stderr

    def test_chunk_override(self, runner, single_cell_config):
        result = runner.invoke(
            main, ["oracle", "--config", single_cell_config,
                   "--chunk", "0.25"])
        assert result.exit_code == 0
        assert "d_av_norm=0.3" in result.stderr


class TestDeterminism:
    @pytest.mark.parametrize("args", [
        ["paths", "--config", "{cfg}"],
        ["solve", "--config", "{cfg}", "--policy", "gamma"],
        ["solve", "--config", "{cfg}", "--policy", "greedy"],
        ["export-lp", "--config", "{cfg}"],
        ["oracle", "--config", "{cfg}"],
    ])
    def test_repeat_runs_identical(self, runner, chain_config, args):
        argv = [a.format(cfg=chain_config) for a in args]
        first = runner.invoke(main, argv)
        second = runner.invoke(main, argv)
        assert first.exit_code == 0
        assert first.stdout == second.stdout
