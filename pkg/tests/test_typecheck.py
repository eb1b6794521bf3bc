import pytest

from dualfpc import syntax as S
from dualfpc.corpus import corpus_file, corpus_names
from dualfpc.program import check_file
from dualfpc.surface import parse, parse_term
from dualfpc.syntax import Mu, Prod, Sum, TyVar, Var, REAL, TANGENT, UNIT
from dualfpc.typecheck import Context, TypeCheckError, is_positive_type, kind_check, typecheck

LIST = Mu("a", Sum(UNIT, Prod(REAL, TyVar("a"))))


def tc(text, lang="source", expected=None, **env):
    return typecheck(Context(terms=env), parse_term(text), lang, expected=expected)


class TestKinding:
    def test_examples(self):
        assert kind_check(set(), Mu("a", Sum(UNIT, TyVar("a"))))
        assert not kind_check(set(), TyVar("a"))
        assert kind_check({"a"}, Prod(REAL, TyVar("a")))

    def test_ill_kinded_annotation(self):
        with pytest.raises(TypeCheckError, match="ill-kinded"):
            typecheck(Context(), S.Lam("x", Var("x"), TyVar("b")))


class TestPositive:
    def test_examples(self):
        assert is_positive_type(LIST)
        assert not is_positive_type(S.Arrow(REAL, REAL))
        assert is_positive_type(REAL)
        assert not is_positive_type(Prod(REAL, TANGENT))


class TestTypecheck:
    def test_relu(self):
        assert tc("fun (x : real) -> if x then 0.0 else x") == S.Arrow(REAL, REAL)

    def test_unit(self):
        assert tc("()") == UNIT

    def test_proj(self):
        assert tc("proj[2] x", "target", x=TANGENT) == Prod(REAL, REAL)
        assert tc("proj[3] x", "target", x=TANGENT) == S.real_power(3)
        assert tc("proj[1] x", "target", x=TANGENT) == REAL

    def test_tangent_rules(self):
        assert tc("(dx <*> 2.0) <+> basis[1] <+> 0t", "target", dx=TANGENT) == TANGENT
        with pytest.raises(TypeCheckError, match="mismatch"):
            tc("dx <*> dx", "target", dx=TANGENT)

    def test_sign(self):
        assert tc("sign x", x=REAL) == Sum(UNIT, UNIT)

    def test_roll_unroll(self):
        ty = tc("case roll[mu a. unit + (real * a)] inr (1.0, roll[mu a. unit + (real * a)] inl ()) of roll v -> v")
        assert ty == Sum(UNIT, Prod(REAL, LIST))

    def test_checking_mode(self):
        assert tc("fun x -> inl x", expected=S.Arrow(REAL, Sum(REAL, UNIT))) == S.Arrow(REAL, Sum(REAL, UNIT))
        with pytest.raises(TypeCheckError, match="cannot infer"):
            tc("fun x -> x")

    def test_case_synthesizes_from_either_branch(self):
        assert tc("case s of inl a -> inl a | inr b -> inr[real + real] b", s=Sum(REAL, REAL)) == Sum(REAL, REAL)

    def test_absurd(self):
        assert tc("absurd[real] v", v=S.VOID) == REAL

    def test_errors_carry_path(self):
        with pytest.raises(TypeCheckError) as e:
            tc("fun (x : real) -> (x, sign x) + 1.0")
        assert e.value.path == ("fun", "+[0]")
        assert "expected real" in e.value.message

    def test_unbound(self):
        with pytest.raises(TypeCheckError, match="unbound variable y"):
            tc("y")

    def test_arity(self):
        with pytest.raises(TypeCheckError, match="expects 2 arguments"):
            typecheck(Context(), S.PrimOp("+", (S.Const(1.0),)))

    def test_target_in_source(self):
        with pytest.raises(TypeCheckError, match="target-only construct"):
            tc("(1.0, 0t)")
        with pytest.raises(TypeCheckError, match="target-only construct"):
            typecheck(Context(), S.Lam("x", Var("x"), TANGENT))

    def test_deterministic(self):
        t = parse_term("fun (p : real * real) -> case p of (a, b) -> a * b")
        assert typecheck(Context(), t) == typecheck(Context(), t)


class TestFiles:
    def test_corpus_checks(self):
        for name in corpus_names():
            types = check_file(corpus_file(name))
            assert types

    def test_later_defs_see_earlier(self):
        f = parse("def a : real = 1.0 ;; def b : real = a + a ;;")
        assert check_file(f) == {"a": REAL, "b": REAL}
        with pytest.raises(TypeCheckError, match="unbound"):
            check_file(parse("def b : real = a ;; def a : real = 1.0 ;;"))


class TestSubjectReduction:
    def test_values_have_declared_type(self):
        """Closed data results re-typecheck at the program's codomain."""
        import numpy as np
        from dualfpc.corpus import differentiable_programs
        from dualfpc.runtime import Converged
        from dualfpc.verify import flatten_value, random_value, value_term

        rng = np.random.default_rng(5)
        for prog in differentiable_programs():
            for _ in range(3):
                o = prog.run(random_value(prog.dom, rng, 4))
                if isinstance(o, Converged):
                    assert typecheck(Context(), value_term(o.value, prog.cod), expected=prog.cod) == prog.cod
                    flatten_value(o.value, prog.cod)
