import csv
import io
import json

import numpy as np
import pytest

from lamiwp import io as lio
from lamiwp.cli import report_schema, run_command, validate_report
from lamiwp.differentials import random_field
from lamiwp.errors import ValidationError


def run(capsys, *argv):
    code = run_command(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_group_build(capsys):
    code, out, _ = run(capsys, "group", "build")
    rec = json.loads(out)
    assert code == 0 and rec["relation_residual"] < 1e-10


def test_group_word_and_reduce(capsys):
    code, out, _ = run(capsys, "group", "word", "a1*a1^-1")
    assert code == 0
    code, out, _ = run(capsys, "group", "reduce", "0.3+0.2i")
    assert code == 0


def test_bad_word_exit_2(capsys):
    code, _, err = run(capsys, "group", "word", "a1*(b1")
    assert code == 2 and "6" in err


def test_subgroups_enumerate(capsys):
    code, out, _ = run(capsys, "subgroups", "enumerate", "--max-index", "2")
    assert code == 0 and json.loads(out)["count"] == 16
    code, out, _ = run(capsys, "subgroups", "enumerate", "--max-index", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 + 15 + 220
    assert set(rows[0]) == {"index", "normal", "cover_genus", "perms"}


def test_subgroups_lattice_csv(capsys):
    code, out, _ = run(capsys, "subgroups", "lattice", "--max-index", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 15
    assert all(r["parent_index"] == "1" and r["containment"] == "2" for r in rows)


def test_out_of_range_genus(capsys):
    code, _, _ = run(capsys, "group", "build", "--genus", "1")
    assert code == 2


@pytest.fixture
def level_file(tmp_path, T2):
    p = tmp_path / "level.json"
    lio.save_json(p, T2.to_json())
    return p


def test_info(capsys, level_file):
    code, out, _ = run(capsys, "subgroups", "info", "--table", str(level_file))
    rec = json.loads(out)
    assert code == 0 and rec["index"] == 2 and rec["cover_genus_euler"] == rec["cover_genus_formula"] == 3


def test_valuation(capsys):
    code, out, _ = run(capsys, "valuation", "a1^2", "--other", "a1", "--depth", "2")
    assert code == 0 and "distance" in json.loads(out)


def test_verify_scaling_report(capsys, level_file):
    argv = ["verify", "scaling", "--level", str(level_file), "--seed", "7", "--no-timing",
            "--tile-radius", "4", "--quad-depth", "2"]
    code, out, _ = run(capsys, *argv)
    rep = json.loads(out)
    validate_report(rep)
    assert code == 0 and rep["identity"] == "scaling" and rep["rel_err"] < 1e-8
    _, again, _ = run(capsys, *argv)
    assert again == out


def test_verify_alt_parity(capsys, tmp_path, T3n):
    p = tmp_path / "t3.json"
    lio.save_json(p, T3n.to_json())
    base = ["verify", "alt", "--level", str(p), "--tile-radius", "2", "--quad-depth", "1", "--no-timing"]
    code, out, _ = run(capsys, *base, "--sigma", "2,3,1")
    assert code == 0 and json.loads(out)["abs_err"] == 0
    code, _, err = run(capsys, *base, "--sigma", "2,1,3")
    assert code == 2 and "odd" in err.lower()


def test_schema_rejects_extra_keys():
    assert report_schema()["additionalProperties"] is False
    with pytest.raises(ValidationError):
        validate_report({"identity": "scaling"})


def test_bad_json_reports_position(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"perms": [1, 2,}')
    code, _, err = run(capsys, "subgroups", "info", "--table", str(p))
    assert code == 2 and "line 1 column" in err


def test_field_round_trip_and_determinism(capsys, tmp_path, level_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code, _, _ = run(capsys, "field", "random", "--level", str(level_file), "--seed", "5",
                         "--quad-depth", "2", "-o", str(out))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    mu = lio.field_from_json(lio.load_json(a))
    assert np.max(np.abs(mu.values)) <= 0.8 + 1e-12
    code, out, _ = run(capsys, "field", "defect", "--field", str(a), "--word", "a1", "--samples", "16")
    assert code == 0


def test_field_file_validation(tmp_path, T2):
    mu = random_field(T2, seed=0, depth=2)
    rec = lio.field_to_json(mu)
    back = lio.field_from_json(json.loads(lio.dumps(rec)))
    assert np.array_equal(back.values, mu.values)
    rec["grid"]["nodes"][0] = [5.0, 5.0]
    with pytest.raises(ValidationError):
        lio.field_from_json(rec)
    del rec["values"]
    with pytest.raises(ValidationError):
        lio.field_from_json(rec)


def test_siegel_commands(capsys, tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"matrix": [[[1 / 3, 0]]]}))
    code, out, _ = run(capsys, "siegel", "potential", "--matrix", str(m))
    assert code == 0 and json.loads(out)["potential"] == pytest.approx(0.117783, abs=1e-6)
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"matrix": [[[0, 2]]]}))
    code, out, _ = run(capsys, "siegel", "cayley", "--period", str(p))
    assert code == 0 and json.loads(out)["Z"][0][0][0] == pytest.approx(1 / 3)
    p.write_text(json.dumps({"matrix": [[[1, 0]]]}))
    code, _, _ = run(capsys, "siegel", "cayley", "--period", str(p))
    assert code == 2


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "x.json"
    lio.save_json(target, {"a": np.float64(1.5), "b": np.arange(2)})
    assert json.loads(target.read_text()) == {"a": 1.5, "b": [0, 1]}
    assert [q.name for q in tmp_path.iterdir()] == ["x.json"]
