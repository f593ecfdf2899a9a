import json
from pathlib import Path

import pytest

from qtime.cli import EXIT_CONTRADICTORY, EXIT_OK, EXIT_VALIDATION, main
from qtime.cli.records import strip_wall_time
from qtime.cli.spec import SpecError, parse_spec

SPECS = Path(__file__).resolve().parents[1] / "specs"
SAMPLES = sorted(SPECS.glob("*.json"))


def load(name):
    return json.loads((SPECS / name).read_text())


def write(tmp_path, data, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return p


@pytest.mark.parametrize("path", SAMPLES, ids=lambda p: p.stem)
def test_every_sample_spec_runs_clean(path, tmp_path):
    sub = json.loads(path.read_text())["experiment"]["name"]
    out = tmp_path / "rec.json"
    assert main([sub, "--spec", str(path), "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["experiment"] == sub
    assert all(rec["checks"].values())


def test_abl_csv_rows(capsys):
    assert main(["abl", "--spec", str(SPECS / "qubit_abl.json"), "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["outcome,probability", "+,0.5", "-,0.5"]


def test_csv_with_out_writes_tables_and_record(tmp_path):
    out = tmp_path / "eom.csv"
    assert main(["pw-constraint", "--spec", str(SPECS / "pw_interaction.json"), "--out", str(out), "--format", "csv"]) == 0
    assert (tmp_path / "eom_eom.csv").exists()
    assert (tmp_path / "eom_kernel.csv").exists()
    assert json.loads((tmp_path / "eom.json").read_text())["experiment"] == "pw-constraint"


def test_non_hermitian_hamiltonian_is_a_validation_error(tmp_path, capsys):
    data = load("qubit_abl.json")
    data["system"]["hamiltonian"] = [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]
    code = main(["abl", "--spec", str(write(tmp_path, data))])
    err = capsys.readouterr().err
    assert code == EXIT_VALIDATION
    assert "system.hamiltonian" in err
    assert "line" in err


def test_validation_error_line_points_at_field(tmp_path):
    data = load("qubit_abl.json")
    data["initial_state"] = [[1, 0], [1, 0]]
    text = json.dumps(data, indent=2)
    with pytest.raises(SpecError) as exc:
        parse_spec(text)
    assert exc.value.path == "initial_state"
    assert '"initial_state"' in text.splitlines()[exc.value.line - 1]


@pytest.mark.parametrize(
    "mutate,path",
    [
        (lambda d: d.pop("system"), "system"),
        (lambda d: d["system"].update(dim=0), "system.dim"),
        (lambda d: d.update(post_state=[[1, 0], [1, 0]]), "post_state"),
        (lambda d: d["bases"]["x"]["vectors"].__setitem__(1, [[1, 0], [0, 0]]), "bases.x"),
        (lambda d: d["experiment"].update(name="nope"), "experiment.name"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d.update(tolerances={"check": 0}), "tolerances.check"),
    ],
)
def test_validation_paths(mutate, path):
    data = load("qubit_abl.json")
    mutate(data)
    with pytest.raises(SpecError) as exc:
        parse_spec(json.dumps(data, indent=2))
    assert exc.value.path == path


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"system": ')
    assert main(["abl", "--spec", str(p)]) == EXIT_VALIDATION


def test_subcommand_must_match_spec(tmp_path):
    assert main(["dhist", "--spec", str(SPECS / "qubit_abl.json")]) == EXIT_VALIDATION


def test_contradictory_selection_exit_code(tmp_path):
    data = load("qubit_abl.json")
    data["post_state"] = [[0, 0], [1, 0]]
    data["bases"]["z"] = {"labels": ["0", "1"], "vectors": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}
    data["experiment"]["params"]["basis"] = "z"
    assert main(["abl", "--spec", str(write(tmp_path, data))]) == EXIT_CONTRADICTORY


def test_record_round_trip_is_byte_stable(tmp_path):
    out = tmp_path / "r.json"
    main(["dhist", "--spec", str(SPECS / "dhist_xz.json"), "--out", str(out)])
    text = out.read_text()
    assert json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n" == text


def test_seed_override_changes_record(tmp_path):
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / f"{seed}.json"
        main(["equiv-suite", "--spec", str(SPECS / "equiv_suite.json"), "--out", str(out), "--seed", seed])
        outs.append(strip_wall_time(out.read_text()))
    assert outs[0] != outs[1]


def test_probability_tables_sum_to_one(tmp_path):
    for name, sub, key in (("qubit_abl.json", "abl", "probabilities"), ("fpf_abl.json", "fpf-measure", "measures")):
        out = tmp_path / "r.json"
        main([sub, "--spec", str(SPECS / name), "--out", str(out)])
        assert abs(sum(json.loads(out.read_text())["outputs"][key].values()) - 1) <= 1e-10


def test_non_decoherent_family_reports_weights_only(tmp_path):
    out = tmp_path / "r.json"
    main(["dhist", "--spec", str(SPECS / "dhist_xz.json"), "--out", str(out)])
    rec = json.loads(out.read_text())
    assert rec["outputs"]["decoherent"] is False
    assert "probabilities" not in rec["outputs"]
    assert abs(rec["outputs"]["max_offdiag"] - 0.25) < 1e-12
