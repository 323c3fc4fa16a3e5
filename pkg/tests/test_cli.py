import csv
import io
import json

import pytest

from fvsolve.cli import (
    EXIT_FAILURE,
    EXIT_NO_ROOTS,
    EXIT_OK,
    ResultRecord,
    RunConfig,
    main,
    parse_config,
    preset_configs,
    run,
    write_output,
)
from fvsolve.errors import ConfigError
from fvsolve.potentials import PotentialModel, coulomb, screened

HYDROGEN_CFG = """\
# hydrogen ground state
problem.kind = schrodinger
problem.l = 0
potential.vector = coulomb -1
basis.N = 30
basis.b = 0.5
search.window = -0.6 -0.3
search.grid_points = 20
"""

EMPTY_CFG = """\
problem.kind = schrodinger
problem.l = 0
potential.vector =
basis.N = 20
search.window = -1 -0.1
search.grid_points = 20
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def test_defaults():
    cfg = parse_config("search.window = -1 -0.1\n")
    assert (cfg.mass, cfg.c, cfg.cf_tol, cfg.refine_tol) == (1.0, 137.036, 1e-12, 1e-10)
    assert cfg.kind == "schrodinger" and cfg.l == 0


def test_empty_potential_gives_model_without_terms():
    cfg = parse_config(EMPTY_CFG)
    assert cfg.vector == () and cfg.scalar == ()


def test_screened_coulomb_vector_line():
    cfg = parse_config("potential.vector = coulomb 92, screened -240 1, screened 320 4\nsearch.window = -10 -1\n")
    assert PotentialModel(cfg.vector) == PotentialModel((coulomb(92), screened(-240, 1), screened(320, 4)))


def test_tenfold_speed_of_light_accepted():
    assert parse_config("system.c = 1370.36\nsearch.window = -1 0\n").c == 1370.36


def test_fv12_takes_j():
    cfg = parse_config("problem.kind = fv12\nproblem.j = 1.5\nsearch.window = -1 0\n")
    assert cfg.l is None and cfg.j == 1.5


@pytest.mark.parametrize(
    "text, line",
    [
        ("search.window = -1 0\nbasis.size = 3\n", 2),
        ("search.window = -1 0\n\nbasis.N = 3\nbasis.N = 4\n", 4),
        ("# comment\nsearch.window -1 0\n", 2),
        ("search.window = -1 0\nbasis.b = fast\n", 2),
        ("potential.vector = cubic 3\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize(
    "text, key",
    [
        ("problem.kind = fv12\nsearch.window = -1 0\n", "problem.j"),
        ("search.window = 0 -1\n", "search.window"),
        ("search.guess = 1 0.1\n", "search.guess"),
        ("search.window = -1 0\nsearch.guess = 1 -0.1\n", "search"),
        ("search.window = -1 0\nbasis.b = -2\n", "basis.b"),
    ],
)
def test_constraint_errors_carry_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


@pytest.mark.parametrize(
    "text",
    [
        HYDROGEN_CFG,
        "problem.kind = fv12\nproblem.j = 0.5\npotential.vector = coulomb -1, screened -0.8 1.5\n"
        "potential.scalar = linear 1\nbasis.n_list = 20 40\nbasis.b_list = 0.4 0.6\nsearch.window = -1 0\n",
        "system.c = 1370.36\nsearch.guess = 15.6 -1e-05\nbasis.theta = 0.1\noutput.format = json\n",
    ],
)
def test_config_echo_reparses_to_equal_config(text):
    cfg = parse_config(text)
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


# ---------------------------------------------------------------------------
# records and output
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def hydrogen_records():
    return run("solve", parse_config(HYDROGEN_CFG)).records


def test_solve_record_contents(hydrogen_records):
    (rec,) = hydrogen_records
    assert rec.energy.real == pytest.approx(-0.5, abs=1e-9)
    assert rec.kind == "bound" and rec.n_max == 30 and rec.wall_time is not None
    assert parse_config(rec.config) == parse_config(HYDROGEN_CFG)


def test_record_dict_round_trip(hydrogen_records):
    (rec,) = hydrogen_records
    assert ResultRecord.from_dict(rec.to_dict()) == rec


def test_json_empty_list():
    assert json.loads(write_output([], "json")) == []


def test_json_bound_record(hydrogen_records):
    (obj,) = json.loads(write_output(hydrogen_records, "json"))
    assert obj["energy"]["im"] == 0
    assert obj["kind"] == "bound"
    assert ResultRecord.from_dict(obj) == hydrogen_records[0]


def test_csv_round_trip_is_bit_exact(hydrogen_records):
    text = write_output(hydrogen_records, "csv").decode()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0])[:7] == ["energy_re", "energy_im", "kind", "N", "b", "cf_depth", "residual"]
    assert float(rows[0]["energy_re"]) == hydrogen_records[0].energy.real
    assert float(rows[0]["energy_im"]) == 0.0


def test_table_has_seven_digits(hydrogen_records):
    text = write_output(hydrogen_records, "table").decode()
    head, row = text.splitlines()
    assert "energy" in head
    assert row.split()[0] == "-0.5"
    assert write_output([], "table") == b"no states found\n"


def test_unknown_format_rejected(hydrogen_records):
    with pytest.raises(ConfigError):
        write_output(hydrogen_records, "xml")


# ---------------------------------------------------------------------------
# commands and exit codes
# ---------------------------------------------------------------------------


def test_solve_empty_potential_is_empty_with_exit_zero(tmp_path, capsysbinary):
    path = write(tmp_path, EMPTY_CFG)
    assert main(["solve", "--config", path, "--format", "json"]) == EXIT_OK
    assert json.loads(capsysbinary.readouterr().out) == []


def test_require_roots_exit_code(tmp_path, capsys):
    path = write(tmp_path, EMPTY_CFG)
    assert main(["solve", "--config", path, "--require-roots"]) == EXIT_NO_ROOTS


@pytest.mark.parametrize(
    "argv_tail, text",
    [
        ([], "basis.nope = 1\n"),
        ([], "problem.kind = fv12\nsearch.window = -1 0\n"),
        (["--threads", "0"], HYDROGEN_CFG),
    ],
)
def test_configuration_errors_exit_two(tmp_path, capsys, argv_tail, text):
    path = write(tmp_path, text)
    assert main(["solve", "--config", path, *argv_tail]) == EXIT_FAILURE
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file_exits_two(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "absent.cfg")]) == EXIT_FAILURE
    assert main(["solve"]) == EXIT_FAILURE
    assert main(["preset", "table9"]) == EXIT_FAILURE


def test_resonance_without_guess_exits_two(tmp_path, capsys):
    assert main(["resonance", "--config", write(tmp_path, HYDROGEN_CFG)]) == EXIT_FAILURE
    assert "search.guess" in capsys.readouterr().err


def test_out_path_and_config_format(tmp_path):
    cfg = write(tmp_path, HYDROGEN_CFG + "output.format = csv\n")
    out = tmp_path / "out.csv"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("energy_re,energy_im,kind")


def test_converge_command():
    cfg = parse_config(HYDROGEN_CFG + "basis.n_list = 20 30\nbasis.b_list = 0.5\n")
    out = run("converge", cfg)
    assert [r.n_max for r in out.records] == [20, 30]
    assert "b=0.5: converged" in out.notes


def test_compare_emits_three_columns():
    cfg = parse_config(HYDROGEN_CFG)
    out = run("compare", cfg)
    assert [r.column for r in out.records] == ["Schr (l=0)", "FV0 (l=0)", "FV1/2 (l=0)"]
    text = write_output(out.records, "table", out.layout).decode()
    assert text.splitlines()[0].split() == ["Schr", "(l=0)", "FV0", "(l=0)", "FV1/2", "(l=0)"]


def test_presets_cover_six_columns():
    for name in ("table2", "table3"):
        labels = [label for label, _ in preset_configs(name)]
        assert len(labels) == 6 and len(set(labels)) == 6
    kinds = [cfg.kind for _, cfg in preset_configs("table1")]
    assert kinds == ["schrodinger", "fv0", "fv12"] * 2


def test_run_rejects_unknown_command():
    with pytest.raises(ConfigError):
        run("plot", parse_config(HYDROGEN_CFG))


def test_run_config_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        RunConfig(kind="dirac", window=(-1, 0))
