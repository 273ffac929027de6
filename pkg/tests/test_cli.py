import json
import subprocess
import sys

import numpy as np
import pytest

from _helpers import planted
from orthotensor.cli import main
from orthotensor.flatten import Signature
from orthotensor.formats import (
    read_decomposition,
    read_model,
    write_decomposition,
    write_model,
    write_tensor,
)
from orthotensor.linalg import svd
from orthotensor.moments import MixtureModel, model_moment
from orthotensor.otd import Decomposition
from orthotensor.tensor import Tensor, frobenius_norm, outer_power


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    report = {}
    for line in out.splitlines():
        key, _, val = line.partition(": ")
        report[key] = val
    return code, report


def _diag_tensor(path):
    e1, e2 = np.eye(2)
    write_tensor(outer_power(e1, 3) + 2 * outer_power(e2, 3), path)


def test_decompose_diagonal(tmp_path, capsys):
    _diag_tensor(tmp_path / "t.txt")
    code, rep = run(capsys, "decompose", "--input", str(tmp_path / "t.txt"),
                    "--signature", "1|2|3", "--output", str(tmp_path / "d.txt"))
    assert code == 0
    assert rep["rank"] == "2"
    assert read_decomposition(tmp_path / "d.txt").rank == 2


def test_decompose_gaussian_is_structure_failure(tmp_path, capsys):
    rng = np.random.default_rng(7)
    write_tensor(Tensor(rng.standard_normal((2, 2, 2))), tmp_path / "g.txt")
    code, rep = run(capsys, "decompose", "--input", str(tmp_path / "g.txt"), "--signature", "1|2|3")
    assert code == 3
    assert float(rep["residual"]) > 1e-3


def test_decompose_matrix_is_svd(tmp_path, capsys):
    A = np.random.default_rng(3).standard_normal((4, 3))
    write_tensor(Tensor(A), tmp_path / "m.txt")
    code, rep = run(capsys, "decompose", "--input", str(tmp_path / "m.txt"), "--signature", "1|2")
    assert code == 0
    weights = [float(x) for x in rep["weights"].split()]
    assert weights == svd(A).singular_values.tolist()


def test_decompose_then_verify_round_trip(tmp_path, capsys, rng):
    T, _ = planted(rng, (3, 4, 3), Signature.singletons(3), 3)
    write_tensor(T, tmp_path / "t.txt")
    code1, rep1 = run(capsys, "decompose", "--input", str(tmp_path / "t.txt"),
                      "--output", str(tmp_path / "d.txt"))
    code2, rep2 = run(capsys, "verify", "--input", str(tmp_path / "t.txt"),
                      "--decomposition", str(tmp_path / "d.txt"))
    assert code1 == code2 == 0
    assert rep1["residual"] == rep2["residual"]
    assert rep1["max_gram_deviation"] == rep2["max_gram_deviation"]


def test_verify_perturbed_weight(tmp_path, capsys, rng):
    T, D = planted(rng, (3, 3, 3), Signature.singletons(3), 2)
    write_tensor(T, tmp_path / "t.txt")
    w = np.array(D.weights, dtype=float)
    w[0] += 0.1
    write_decomposition(Decomposition(D.signature, w, D.factors), tmp_path / "d.txt")
    code, rep = run(capsys, "verify", "--input", str(tmp_path / "t.txt"),
                    "--decomposition", str(tmp_path / "d.txt"))
    assert code == 1
    # the perturbation is 0.1 times a unit-norm atom
    assert float(rep["residual"]) == pytest.approx(0.1 / frobenius_norm(T), rel=1e-10)


def test_verify_non_orthonormal_factors(tmp_path, capsys):
    e1 = np.array([1.0, 0.0])
    f = Tensor(np.array([1.0, 1.0]) / np.sqrt(2))
    D = Decomposition(Signature.singletons(2), [1.0, 1.0],
                      [[Tensor(e1), Tensor(e1)], [Tensor(e1), f]])
    T = np.outer(e1, e1) + np.outer(e1, f.values)
    write_tensor(Tensor(T), tmp_path / "t.txt")
    write_decomposition(D, tmp_path / "d.txt")
    code, rep = run(capsys, "verify", "--input", str(tmp_path / "t.txt"),
                    "--decomposition", str(tmp_path / "d.txt"))
    assert code == 1
    assert float(rep["residual"]) <= 1e-15
    assert float(rep["max_gram_deviation"]) > 0.5


def test_generate_constant_law(tmp_path, capsys):
    write_model(MixtureModel([1.0], [[1.0, 0.0, 0.0]]), tmp_path / "m.txt")
    code, _ = run(capsys, "generate", "--model", str(tmp_path / "m.txt"), "--count", "4",
                  "--output", str(tmp_path / "s.txt"))
    assert code == 0
    lines = (tmp_path / "s.txt").read_text().splitlines()
    assert lines[0] == "samples v1 dim 3"
    assert len(lines) == 5 and len(set(lines[1:])) == 1


def test_generate_deterministic(tmp_path, capsys):
    args = ["generate", "--dim", "4", "--weights", "0.6,0.4", "--random-means", "5",
            "--count", "50", "--seed", "11"]
    run(capsys, *args, "--output", str(tmp_path / "a.txt"))
    run(capsys, *args, "--output", str(tmp_path / "b.txt"))
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.txt.truth").read_bytes() == (tmp_path / "b.txt.truth").read_bytes()


def test_generate_check_converges(tmp_path, capsys):
    errs = []
    for count in ("200", "20000"):
        code, rep = run(capsys, "generate", "--dim", "3", "--weights", "0.7,0.3",
                        "--random-means", "2", "--count", count, "--check",
                        "--output", str(tmp_path / "s.txt"))
        assert code == 0
        errs.append(float(rep["moment3_error"]))
    assert errs[1] < errs[0]


def test_generate_rejects_bad_model(tmp_path, capsys):
    code, _ = run(capsys, "generate", "--dim", "3", "--weights", "0.7,0.7",
                  "--random-means", "2", "--output", str(tmp_path / "s.txt"))
    assert code == 2


def test_estimate_exact_moments(tmp_path, capsys):
    m = MixtureModel([0.5, 0.5], np.eye(2))
    write_tensor(model_moment(m, 2), tmp_path / "m2.txt")
    write_tensor(model_moment(m, 3), tmp_path / "m3.txt")
    write_model(m, tmp_path / "truth.txt")
    code, rep = run(capsys, "estimate", "--moments", str(tmp_path / "m2.txt"),
                    str(tmp_path / "m3.txt"), "--truth", str(tmp_path / "truth.txt"),
                    "--output", str(tmp_path / "est.txt"))
    assert code == 0
    assert float(rep["max_mean_error"]) <= 1e-8
    assert float(rep["max_weight_error"]) <= 1e-8
    assert read_model(tmp_path / "est.txt").r == 2


def test_estimate_rank_deficient(tmp_path, capsys):
    m = MixtureModel.random(4, [0.6, 0.4], seed=8)
    write_tensor(model_moment(m, 2), tmp_path / "m2.txt")
    write_tensor(model_moment(m, 3), tmp_path / "m3.txt")
    code, rep = run(capsys, "estimate", "--moments", str(tmp_path / "m2.txt"),
                    str(tmp_path / "m3.txt"), "--tol-rank", "1e-10")
    assert code == 0
    assert rep["rank"] == "2"


def test_generate_estimate_noisy(tmp_path, capsys):
    run(capsys, "generate", "--dim", "5", "--weights", "0.5,0.3,0.2", "--random-means", "4",
        "--count", "100000", "--seed", "1", "--output", str(tmp_path / "s.txt"))
    code, rep = run(capsys, "estimate", "--input", str(tmp_path / "s.txt"),
                    "--truth", str(tmp_path / "s.txt.truth"), "--averaging", "three")
    assert code == 0
    assert float(rep["max_mean_error"]) <= 0.05
    assert float(rep["max_weight_error"]) <= 0.05


def test_estimate_not_psd(tmp_path, capsys):
    write_tensor(Tensor(np.diag([1.0, -0.5])), tmp_path / "m2.txt")
    write_tensor(Tensor(np.zeros((2, 2, 2))), tmp_path / "m3.txt")
    code, rep = run(capsys, "estimate", "--moments", str(tmp_path / "m2.txt"), str(tmp_path / "m3.txt"))
    assert code == 3
    assert rep["status"] == "model-violation"


def test_input_errors(tmp_path, capsys):
    assert main(["decompose", "--input", str(tmp_path / "missing.txt")]) == 2
    (tmp_path / "bad.txt").write_text("not a tensor\n")
    assert main(["decompose", "--input", str(tmp_path / "bad.txt")]) == 2
    _diag_tensor(tmp_path / "t.txt")
    assert main(["decompose", "--input", str(tmp_path / "t.txt"), "--signature", "1|2"]) == 2
    assert main(["decompose", "--input", str(tmp_path / "t.txt"), "--tol", "-1"]) == 2
    assert main(["nonsense"]) == 2
    capsys.readouterr()


def test_json_report(tmp_path, capsys):
    _diag_tensor(tmp_path / "t.txt")
    assert main(["decompose", "--input", str(tmp_path / "t.txt"), "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rank"] == 2 and rep["ok"] is True
    assert list(rep)[:3] == ["status", "signature", "rank"]


def test_module_entry_point(tmp_path):
    _diag_tensor(tmp_path / "t.txt")
    proc = subprocess.run([sys.executable, "-m", "orthotensor", "decompose", "--input",
                           str(tmp_path / "t.txt")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "rank: 2" in proc.stdout
