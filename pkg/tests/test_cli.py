from __future__ import annotations

import json

import pytest

from landau.cli import (
    EXIT_ERROR,
    EXIT_OK,
    ComponentRecord,
    ResultRecord,
    format_result,
    load_record,
    main,
    parse_result,
    save_database_entry,
)


def _run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture(scope="module")
def bubble_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("bubble")
    txt, js = d / "B2.txt", d / "B2.json"
    assert main(["pld", "--diagram", "B2", "--no-chi", "--save", str(txt), "--json", str(js)]) == EXIT_OK
    return txt, js


def _record():
    return ResultRecord(
        name="toy",
        edges=[[1, 2], [2, 1]],
        nodes=[1, 2],
        internal_masses=["m1", "m2"],
        external_masses=["0", "0"],
        U="x[1] + x[2]",
        F="s*x[1]*x[2]",
        parameters=["m1", "m2", "s"],
        variables=["x[1]", "x[2]"],
        chi_generic=3,
        f_vector=[3, 3],
        components=[
            ComponentRecord("m1", 2, [[1, 0]], ["PLD_num"]),
            ComponentRecord("s - 4*m1", None, [[-1, -1], [0, -1]], ["PLD_sym", "PLD_num"]),
        ],
        unresolved=[],
    )


def test_text_round_trip():
    rec = _record()
    text = format_result(rec)
    again = parse_result(text, "toy.txt")
    assert again == rec
    assert format_result(again) == text


def test_text_layout():
    text = format_result(_record())
    assert "chi_generic = 3" in text or "χ_generic = 3" in text
    assert "nothing" in text


def test_json_mirror_matches_text(bubble_files):
    txt, js = bubble_files
    a, b = load_record(str(txt)), load_record(str(js))
    assert a == b
    assert json.loads(js.read_text())["name"] == a.name


def test_bubble_components(bubble_files):
    rec = load_record(str(bubble_files[0]))
    assert sorted(c.D for c in rec.components) == sorted(
        ["m1", "m2", "s", "m1^2 - 2*m1*m2 - 2*m1*s + m2^2 - 2*m2*s + s^2"]
    )
    assert not rec.partial


def test_load_is_byte_stable(capsys, bubble_files):
    txt, js = bubble_files
    code, out, _ = _run(capsys, "pld", "--load", str(txt))
    assert code == EXIT_OK
    assert out == txt.read_text()
    code, out_json, _ = _run(capsys, "pld", "--load", str(js))
    assert out_json == out


def test_database_entry(tmp_path):
    from landau.graphs import library_spec

    root = save_database_entry(tmp_path, library_spec("B2"), _record(), "generic")
    names = sorted(p.name for p in root.iterdir())
    assert names == ["result.json", "result.txt", "spec.json"]


def test_symanzik_command(capsys):
    code, out, _ = _run(capsys, "symanzik", "--diagram", "B2")
    assert code == EXIT_OK
    assert "x[1] + x[2]" in out


def test_volume_command(capsys):
    code, out, _ = _run(capsys, "volume", "--diagram", "par")
    assert code == EXIT_OK
    assert "35" in out


def test_weights_command(capsys):
    code, out, _ = _run(capsys, "weights", "--diagram", "par")
    assert code == EXIT_OK
    assert "# codim 1: 9 faces" in out
    assert "weights: [-1, -1, -1, -1]" in out


def test_initial_form_accepts_negative_weights(capsys):
    code, out, _ = _run(capsys, "initial-form", "--diagram", "B2", "--weight", "-1,-1")
    assert code == EXIT_OK
    assert out.strip().startswith("-m1*x[1]^2")


def test_oneloop_command(capsys):
    code, out, _ = _run(capsys, "oneloop", "--n", "3")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "# one-loop n=3 subspace=generic degree=17"


def test_specialized_pad_command(capsys):
    code, out, _ = _run(capsys, "specialized-pad", "--poly", "z1 + z2*x + z3*y + z4*x*y", "--vars", "x,y")
    assert code == EXIT_OK
    assert "z1*z4 - z2*z3" in out


def test_malformed_edges_report_location(capsys):
    code, _, err = _run(capsys, "symanzik", "--edges", "[[1,2],[2,", "--nodes", "[1,2]")
    assert code == EXIT_ERROR
    assert err.startswith("error: --edges")
    assert "column" in err


def test_unknown_diagram(capsys):
    code, _, err = _run(capsys, "symanzik", "--diagram", "nope")
    assert code == EXIT_ERROR
    assert err.startswith("error:")


def test_missing_result_file(capsys, tmp_path):
    code, _, err = _run(capsys, "pld", "--load", str(tmp_path / "absent.txt"))
    assert code == EXIT_ERROR


def test_corrupt_result_file(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("#### name\nnot a result\n")
    code, _, err = _run(capsys, "pld", "--load", str(bad))
    assert code == EXIT_ERROR


def test_bad_relation(capsys):
    code, _, err = _run(capsys, "symanzik", "--diagram", "B2", "--relation", "s")
    assert code == EXIT_ERROR
