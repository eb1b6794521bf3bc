import json
import math

import pytest

from dualfpc.cli import main, transform_file
from dualfpc.corpus import corpus_file, corpus_names, corpus_path
from dualfpc.surface import parse
from dualfpc.program import check_file


def path(name):
    return str(corpus_path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def write(tmp_path):
    def _write(text, name="prog.dfpc"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


class TestCheck:
    def test_relu(self, capsys):
        code, out, _ = run(capsys, "check", path("relu"))
        assert code == 0 and out == "relu : real -> real\n"

    def test_type_error(self, capsys, write):
        code, _, err = run(capsys, "check", write("def f : real -> real = fun x -> (x, x) ;;"))
        assert code == 2 and "type mismatch" in err and "fun" in err

    def test_target_construct(self, capsys, write):
        code, _, err = run(capsys, "check", write("def f : real * tangent = (1.0, 0t) ;;"))
        assert code == 2 and "target-only construct" in err

    def test_parse_error(self, capsys, write):
        code, _, err = run(capsys, "check", write("def f : real = (1.0 ;;"))
        assert code == 1 and "1:21" in err


class TestRun:
    def test_relu(self, capsys):
        assert run(capsys, "run", path("relu"), "2.0")[:2] == (0, "2.0\n")
        code, out, _ = run(capsys, "run", path("relu"), "0.0")
        assert code == 3 and out.startswith("domain error at sign")

    def test_taylor(self, capsys):
        code, out, _ = run(capsys, "run", path("taylor_exp"), "1.0")
        assert code == 0 and abs(float(out) - math.e) < 1e-7

    def test_tuple_args(self, capsys):
        assert run(capsys, "run", path("mul"), "3.0", "4.0")[:2] == (0, "12.0\n")

    def test_constant(self, capsys):
        assert run(capsys, "run", path("const"))[:2] == (0, "3.0\n")

    def test_fuel(self, capsys):
        code, out, _ = run(capsys, "run", path("taylor_exp"), "1.0", "--fuel", "100")
        assert code == 3 and "fuel exhausted" in out


class TestAd:
    def test_const(self, capsys):
        code, out, _ = run(capsys, "ad", path("const"))
        assert code == 0 and "(3.0, 0t)" in out

    def test_relu_type(self, capsys):
        _, out, _ = run(capsys, "ad", path("relu"))
        assert "def relu : (real * tangent) -> (real * tangent)" in out

    @pytest.mark.parametrize("name", corpus_names())
    @pytest.mark.parametrize("mode", ["fwd", "rev"])
    def test_output_rechecks(self, name, mode):
        f = corpus_file(name)
        types = check_file(parse(transform_file(f, mode)), "target")
        assert set(f.names()) <= set(types)

    def test_rev_gradient(self, capsys, write):
        src = transform_file(corpus_file("mul"), "rev")
        p = write(src, "mul_ad.dfpc")
        code, out, _ = run(capsys, "check", "--target", p)
        assert code == 0 and "mul_grad : (real * real) -> (real * real)" in out


class TestDerivatives:
    def test_grad_square(self, capsys, write):
        p = write("def sq : real -> real = fun x -> x * x ;;")
        code, out, _ = run(capsys, "grad", p, "--at", "3.0", "--json")
        assert code == 0 and abs(json.loads(out)["jacobian"][0][0] - 6.0) < 1e-6

    def test_jvp(self, capsys):
        code, out, _ = run(capsys, "jvp", path("mul"), "--at", "3.0", "4.0", "--dir", "1.0", "0.5", "--json")
        assert code == 0 and json.loads(out) == {"value": [12.0], "tangent": [5.5]}

    def test_jvp_bad_dir(self, capsys):
        code, _, err = run(capsys, "jvp", path("mul"), "--at", "3.0", "4.0", "--dir", "1.0")
        assert code == 2 and "--dir needs 2" in err

    def test_grad_bottom(self, capsys):
        code, out, _ = run(capsys, "grad", path("relu"), "--at", "0.0")
        assert code == 3


class TestVerify:
    def test_mul(self, capsys):
        code, out, _ = run(capsys, "verify", path("mul"), "--trials", "20")
        assert code == 0 and out.startswith("mul: pass")

    def test_relu(self, capsys):
        code, _, _ = run(capsys, "verify", path("relu"), "--trials", "100")
        assert code == 0

    def test_json_deterministic(self, capsys):
        a = run(capsys, "verify", path("trig"), "--trials", "3", "--json", "--seed", "5")[1]
        b = run(capsys, "verify", path("trig"), "--trials", "3", "--json", "--seed", "5")[1]
        assert a == b and json.loads(a)[0]["summary"]["verdict"] == "pass"

    def test_env_seed(self, capsys, monkeypatch):
        a = run(capsys, "verify", path("trig"), "--trials", "2", "--json", "--seed", "9")[1]
        monkeypatch.setenv("DUALFPC_SEED", "9")
        b = run(capsys, "verify", path("trig"), "--trials", "2", "--json")[1]
        assert a == b

    def test_failure_exit_code(self, capsys, write):
        # an impossible tolerance forces a failing verdict
        code, out, _ = run(capsys, "verify", path("sigmoid_net"), "--trials", "3", "--tol", "1e-30")
        assert code == 4 and "FAIL" in out

    def test_bad_config(self, capsys):
        code, _, _ = run(capsys, "verify", path("mul"), "--trials", "0")
        assert code == 64
