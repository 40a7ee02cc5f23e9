"""Smoke test for the kpcohft Python bindings.

Build first:  pip install --no-build-isolation -e crates/python
"""

from fractions import Fraction

import kpcohft_py as k


def frac(s):
    return Fraction(s)


def main():
    nu = k.Partition([2, 1])
    assert nu.parts == [2, 1] and nu.size == 3 and len(nu) == 2
    assert nu.hook_lengths() == [3, 1, 1]
    assert sorted(nu.contents()) == [-1, 0, 1]
    assert nu.conjugate() == nu
    assert nu.character(k.Partition([1, 1, 1])) == 2
    assert nu.character(k.Partition([3])) == -1
    assert len(k.partitions_of(6)) == 11

    # y_hat = z, psi_hat = 0: tau = exp(p_1/hbar), Schur coefficients 1/prod(hooks) hbar^{-|nu|}
    shift = k.TauData({}, {(1, 0): "1"})
    coeffs = {(tuple(parts), e): v for parts, e, v in shift.schur_coefficients(4)}
    assert frac(coeffs[((2, 1), -3)]) == Fraction(1, 3)
    assert frac(coeffs[((2, 2), -4)]) == Fraction(1, 12)

    naive = k.TauData.naive_hodge()
    assert naive.psi_hat == {(1, 0): "1/1"}
    assert naive.kp_check(4)["pass"]

    tr = k.TopologicalRecursion(k.SpectralCurve.airy())
    w03 = tr.omega(0, 3)
    assert w03["g"] == 0 and w03["n"] == 3
    assert tr.loop_equations(1, 1)["pass"]
    assert k.SpectralCurve("1 - z", "z", "1", "1").to_dict() == k.SpectralCurve.naive_hodge().to_dict()

    for scenario in ["inversion", "mv-lemma", "moebius", "naive-hodge"]:
        report = k.verify(scenario)
        assert report["schema_version"] == "1" and report["pass"], scenario
    assert k.verify("inversion", 'w = "0"\nbeta = "-2/3"')["pass"]

    t = k.table("t-forms")
    assert t == k.table("t-forms")
    row = next(r for r in t["rows"] if r["k"] == "2" and r["m"] == "3")
    assert row["value"] == "25/1"

    for bad in [lambda: k.verify("nope"), lambda: k.verify("inversion", "bogus = 1")]:
        try:
            bad()
        except (ValueError, k.KpcohftError):
            pass
        else:
            raise AssertionError("expected an error")

    print("kpcohft python smoke: ok")


if __name__ == "__main__":
    main()
