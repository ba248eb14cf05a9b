import json
import re

import pytest

from divcorr.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_delta_basic(capsys):
    code, out, _ = run(capsys, "delta", "--x", "100")
    assert code == 0
    assert out.startswith("# divcorr v")
    assert "6.0398484" in out


def test_delta_with_voronoi(capsys):
    code, out, _ = run(capsys, "delta", "--x", "100.5", "--voronoi-n", "4000")
    assert code == 0
    assert "gap" in out
    last = out.strip().splitlines()[-1].split(",")
    assert float(last[-1]) < 0.5


def test_delta_domain_error(capsys):
    code, out, err = run(capsys, "delta", "--x", "0.5")
    assert code == 2
    assert "must be >= 1" in err


def test_cf_surd(capsys):
    code, out, _ = run(capsys, "cf", "--theta", "surd:2", "--terms", "10")
    assert code == 0
    assert "9,2,3363,2378," in out
    assert "determinant,True" in out


def test_cf_rejects_rational(capsys):
    code, _, err = run(capsys, "cf", "--theta", "rat:22/7")
    assert code == 2
    assert "irrational" in err


def test_cf_construct_taubeta(capsys):
    code, out, _ = run(capsys, "cf", "--construct", "taubeta:2/1:4")
    assert code == 0
    assert "0.8125152587890625" in out
    assert "4,16" in out


def test_cf_construct_jarnik(capsys):
    code, out, _ = run(capsys, "cf", "--construct", "jarnik:expexp:6")
    assert code == 0
    assert "target_met" in out
    assert ",True" in out.strip().splitlines()[-1]


def test_cf_parse_error_position(capsys):
    code, _, err = run(capsys, "cf", "--theta", "surd:x")
    assert code == 2
    assert "position" in err


def test_correlate_csv_and_fit(capsys):
    code, out, _ = run(capsys, "correlate", "--theta", "rat:2/1",
                       "--xmin", "100", "--xmax", "2000", "--points", "4",
                       "--fit")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1] == "theta_spec,X,I,I_over_X32,method,breakpoints_used"
    assert len([l for l in lines if l.startswith("rat:2/1,")]) == 4
    assert any(l.startswith("fit_slope,") for l in lines)


def test_correlate_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "correlate", "--theta",
                       "surd:2", "--xmin", "100", "--xmax", "1000",
                       "--points", "3")
    assert code == 0
    body = out.partition("\n")[2]
    doc = json.loads(body)
    assert len(doc["results"]) == 3


def test_correlate_deterministic_across_threads(capsys):
    argv = ["correlate", "--theta", "surd:2", "--xmin", "500",
            "--xmax", "5000", "--points", "5"]
    _, out1, _ = run(capsys, "--threads", "1", *argv)
    _, out4, _ = run(capsys, "--threads", "4", *argv)
    strip = lambda s: re.sub(r"threads=\d+", "threads=N", s)
    assert strip(out1) == strip(out4)
    # data rows themselves are identical bytes
    assert out1.splitlines()[1:] == out4.splitlines()[1:]


def test_compare_runs(capsys):
    code, out, _ = run(capsys, "compare", "--theta", "surd:2", "--x", "100")
    assert code == 0
    assert "disc_over_X118" in out


def test_verify_lambda(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "lambda")
    assert code == 0
    assert "suite lambda: PASS" in out


def test_verify_unknown_suite(capsys):
    with pytest.raises(SystemExit) as ei:
        run(capsys, "verify", "--suite", "nope")
    assert ei.value.code == 2


def test_resource_cap_exit_code(capsys):
    code, _, err = run(capsys, "correlate", "--theta", "rat:2/1",
                       "--xmin", "100", "--xmax", "5e8", "--points", "3")
    assert code == 3
    assert "cap" in err


def test_header_records_config(capsys):
    _, out, _ = run(capsys, "--precision-bits", "128", "--seed", "9",
                    "delta", "--x", "2")
    head = out.splitlines()[0]
    assert "precision_bits=128" in head and "seed=9" in head


def test_precision_exhausted_exit_code(capsys):
    code, _, err = run(capsys, "cf", "--construct", "taubeta:2/1:9")
    assert code == 4
    assert "max safe depth" in err
