import math

import pytest

from warpspec.cli import (
    CSV_HEADER,
    ConfigError,
    fmt,
    load_config,
    main,
)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, body, name="exp.ini"):
    path = tmp_path / name
    path.write_text(body)
    return path


CIRCLE = """\
[metric]
a = -1
n = 1

[cross_section]
name = circle

[sweep]
degrees = 0
x_values = 2, 5
eps_values = 1e-2 1e-3 1e-4
"""


@pytest.mark.parametrize("v,expected", [
    (0.25, "0.25"),
    (1.0, "1.0"),
    (math.pi, "3.14159265359"),
    (1e-6, "1e-06"),
    (2.0 / 3.0, "0.666666666667"),
])
def test_fmt(v, expected):
    assert fmt(v) == expected
    assert float(fmt(v)) == float(f"{v:.12g}")


@pytest.mark.parametrize("argv,sigma", [
    (["--a", "-1", "--b", "1", "--c1", "1", "--c2", "1", "--n", "3", "--p", "1"], "0.25"),
    (["--a", "-2", "--n", "3", "--p", "1"], "0"),
    (["--a", "-1", "--n", "2", "--p", "1"], "0"),
])
def test_essential_examples(argv, sigma, capsys):
    code, out, _ = run(["essential", *argv], capsys)
    assert code == 0
    assert out == f"sigma={sigma} interval=[{sigma},inf)\n"


def test_essential_bad_degree_is_usage_error(capsys):
    code, out, err = run(["essential", "--a", "-1", "--n", "2", "--p", "5"], capsys)
    assert code == 2
    assert out == ""
    assert len(err.strip().splitlines()) == 1


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["essential", "--a", "-1"])
    assert info.value.code == 2


def parse_rows(text):
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    keys = CSV_HEADER.split(",")
    return [dict(zip(keys, line.split(","))) for line in lines[1:]]


def test_count_example(capsys):
    eps = math.exp(-10.0)
    code, out, _ = run(["count", "--a", "-1", "--eps", repr(eps), "--p", "0",
                        "--x", repr(math.pi)], capsys)
    assert code == 0
    (row,) = parse_rows(out)
    assert abs(int(row["count"]) - 10) <= 1
    assert row["flags"] == ""


def test_count_infeasible_row_exit_3(capsys):
    code, out, _ = run(["count", "--a", "-1", "--eps", "0.1", "--p", "0", "--x", "5"], capsys)
    assert code == 3
    (row,) = parse_rows(out)
    assert "r0_infeasible" in row["flags"].split(";")
    assert row["r0"] == "nan"


def test_sweep_with_infeasible_row_still_writes_all_rows(tmp_path, capsys):
    cfg = write_config(tmp_path, CIRCLE.replace("1e-2 1e-3 1e-4", "1e-1 1e-2"))
    code, out, _ = run(["sweep", str(cfg)], capsys)
    assert code == 3
    flagged = [r for r in parse_rows(out) if r["flags"]]
    assert [(r["eps"], r["x"]) for r in flagged] == [("0.1", "5.0")]


def test_count_dimension_mismatch(capsys):
    code, _, err = run(["count", "--a", "-1", "--n", "2", "--eps", "0.1", "--p", "0",
                        "--x", "1"], capsys)
    assert code == 2
    assert "dimension" in err


def test_csv_rows_round_trip(tmp_path, capsys):
    cfg = write_config(tmp_path, CIRCLE)
    code, out, _ = run(["sweep", str(cfg), "-o", "-"], capsys)
    assert code == 0
    rows = parse_rows(out)
    assert len(rows) == 6
    for row in rows:
        assert repr(int(row["count"]) - float(row["prediction"])) == row["remainder"]
        for key in ("eps", "x", "R", "sigma", "prediction", "r0"):
            assert fmt(float(row[key])) == row[key]


def test_sweep_row_order(tmp_path, capsys):
    cfg = write_config(tmp_path, CIRCLE.replace("degrees = 0", "degrees = 1, 0"))
    _, out, _ = run(["sweep", str(cfg)], capsys)
    keys = [(int(r["p"]), float(r["x"]), -float(r["eps"])) for r in parse_rows(out)]
    assert keys == sorted(keys)
    assert len(keys) == 12


def test_sweep_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, CIRCLE)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", str(cfg), "-o", str(first)]) == 0
    assert main(["sweep", str(cfg), "-o", str(second), "-j", "3"]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0] == CSV_HEADER


def test_output_path_from_config(tmp_path, capsys):
    target = tmp_path / "out.csv"
    cfg = write_config(tmp_path, CIRCLE + f"\n[output]\npath = {target}\n")
    code, out, _ = run(["sweep", str(cfg)], capsys)
    assert code == 0 and out == ""
    assert target.read_text().startswith(CSV_HEADER + "\n")


def test_single_row_config_matches_count(tmp_path, capsys):
    cfg = write_config(tmp_path, """\
[metric]
a = -2
n = 1
[sweep]
degrees = 0
x_values = 3
eps_values = 0.01
""")
    _, swept, _ = run(["sweep", str(cfg)], capsys)
    _, counted, _ = run(["count", "--a", "-2", "--eps", "0.01", "--p", "0", "--x", "3"], capsys)
    assert swept == counted
    assert len(swept.splitlines()) == 2


def test_zero_harmonic_degree_gives_zero(tmp_path, capsys):
    cfg = write_config(tmp_path, """\
[metric]
a = -1
n = 2
[cross_section]
name = sphere
betti = 0:1, 1:0, 2:1
nu = 0:2, 1:2, 2:2
[sweep]
degrees = 1
x_values = 2 5
eps_values = 0.01 0.0001
""")
    code, out, _ = run(["sweep", str(cfg)], capsys)
    assert code == 0
    for row in parse_rows(out):
        assert row["count"] == "0"
        assert float(row["prediction"]) == 0.0


def test_inline_modes(tmp_path):
    cfg = write_config(tmp_path, """\
[metric]
a = -1
n = 1
[cross_section]
betti = 0:1, 1:1
nu = 0:1
modes.0 = 1:2, 4:2
""")
    with pytest.raises(ConfigError):
        # no [sweep] section yet
        load_config(cfg)
    cfg.write_text(cfg.read_text() + "[sweep]\ndegrees = 0\nx_values = 1\neps_values = 0.5\n")
    loaded = load_config(cfg)
    assert loaded.model.mode_list(0) == ((1.0, 2), (4.0, 2))
    assert loaded.model.harmonic_dimension(0) == 1


def test_empty_x_list_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, CIRCLE.replace("x_values = 2, 5", "x_values ="))
    code, out, err = run(["sweep", str(cfg)], capsys)
    assert code == 2
    assert out == ""
    assert "line 10" in err and "x_values" in err
    assert len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("old,new,field", [
    ("degrees = 0", "degrees = 4", "degrees"),
    ("eps_values = 1e-2 1e-3 1e-4", "eps_values = 1e-1 -1", "eps_values"),
    ("a = -1", "a = -0.5", "[metric]"),
    ("a = -1", "a = minus one", "a"),
    ("name = circle", "name = klein", "name"),
])
def test_config_diagnostics(tmp_path, old, new, field):
    cfg = write_config(tmp_path, CIRCLE.replace(old, new))
    with pytest.raises(ConfigError, match=field):
        load_config(cfg)


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["sweep", str(tmp_path / "nope.ini")], capsys)
    assert code == 2
    assert "cannot read" in err


def test_potential_dump(capsys):
    code, out, _ = run(["potential-dump", "--a", "-1", "--n", "3", "--eps", "0.1",
                        "--p", "1", "--points", "4"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "tau,r"
    assert len(lines) == 6
    assert all(line.split(",")[1] == "0.25" for line in lines[1:])
    assert float(lines[-1].split(",")[0]) == pytest.approx(math.log(11.0), rel=1e-11)
