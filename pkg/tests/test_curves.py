"""Prime classification checked against brute-force group arithmetic.

The reference implementations here enumerate curve points and scan the
quadratic extension directly, so they are slow but unarguable; the library
must match them exactly on every prime where both run.
"""
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selmerfan.curves import (
    CurveQ,
    PrimeClassRecord,
    ReductionError,
    ap,
    classify_prime,
    classify_primes,
    classify_range,
    density_report,
    dim3_fp,
    dim3_fp2,
    division_poly_3,
    frobenius_class,
    good_primes,
    is_prime,
    primes_upto,
)
from selmerfan.errors import ConfigError, ConsistencyError

FIX = CurveQ(1, 1, "fix")


def pow_mod(xs, e, p):
    import numpy as np

    out = np.ones_like(xs)
    base = xs % p
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    return out


# ---------------------------------------------------------------- reference

def curve_points(a, b, p):
    pts = [None]
    for x in range(p):
        f = (x * x * x + a * x + b) % p
        for y in range(p):
            if y * y % p == f:
                pts.append((x, y))
    return pts


def pt_add(P, Q, a, p):
    if P is None:
        return Q
    if Q is None:
        return P
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2 and (y1 + y2) % p == 0:
        return None
    if P == Q:
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def pt_triple(P, a, p):
    R = None
    for _ in range(3):
        R = pt_add(R, P, a, p)
    return R


def brute_dim3(a, b, p):
    """Torsion dimension by literally tripling every point."""
    pts = curve_points(a, b, p)
    t = sum(1 for P in pts if P is not None and pt_triple(P, a, p) is None)
    assert t in (0, 2, 8), t
    return {0: 0, 2: 1, 8: 2}[t], len(pts)


def brute_dim3_fp2(a, b, p):
    """Torsion dimension over the quadratic extension by full scan."""
    n = 2
    while pow(n, (p - 1) // 2, p) != p - 1:
        n += 1

    def mul(z, w):
        return ((z[0] * w[0] + n * z[1] * w[1]) % p, (z[0] * w[1] + z[1] * w[0]) % p)

    def is_sq(z):
        if z == (0, 0):
            return True
        e = (p * p - 1) // 2
        r, base = (1, 0), z
        while e:
            if e & 1:
                r = mul(r, base)
            base = mul(base, base)
            e >>= 1
        return r == (1, 0)

    coeffs = [c % p for c in division_poly_3(CurveQ(a, b))]
    t = 0
    for a0, b0 in itertools.product(range(p), repeat=2):
        z = (a0, b0)
        acc = (0, 0)
        for coef in reversed(coeffs):
            acc = mul(acc, z)
            acc = ((acc[0] + coef) % p, acc[1])
        if acc == (0, 0):
            f = mul(mul(z, z), z)
            f = ((f[0] + a * z[0] + b) % p, (f[1] + a * z[1]) % p)
            if is_sq(f):
                t += 2
    assert t in (0, 2, 8), t
    return {0: 0, 2: 1, 8: 2}[t]


# ------------------------------------------------------------------- curves

class TestCurveQ:
    def test_discriminant(self):
        assert FIX.discriminant == -16 * 31
        assert CurveQ(0, 1).discriminant == -16 * 27

    def test_division_poly_discriminant_identity(self):
        # disc(3x^4 + 6Ax^2 + 12Bx - A^2) = -27 * disc(curve)^2, so for a
        # good prime p > 3 the quartic never has repeated roots mod p and
        # the repeated-root consistency guard is unreachable on valid input
        sympy = pytest.importorskip("sympy")
        x, A, B = sympy.symbols("x A B")
        quartic = 3 * x**4 + 6 * A * x**2 + 12 * B * x - A**2
        delta = -16 * (4 * A**3 + 27 * B**2)
        ratio = sympy.simplify(sympy.discriminant(quartic, x) / delta**2)
        assert ratio == -27

    def test_singular_rejected(self):
        with pytest.raises(ConfigError):
            CurveQ(0, 0)
        with pytest.raises(ConfigError):
            CurveQ(-3, 2)

    def test_division_poly_pins(self):
        assert division_poly_3(CurveQ(0, 1)) == (0, 12, 0, 0, 3)
        assert division_poly_3(CurveQ(1, -1)) == (-1, -12, 6, 0, 3)


class TestPrimeHelpers:
    def test_is_prime(self):
        assert [n for n in range(2, 30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        assert not is_prime(1)
        assert not is_prime(0)

    def test_primes_upto(self):
        assert list(primes_upto(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        assert len(primes_upto(10**4)) == 1229

    def test_good_primes_excludes_bad_and_tiny(self):
        gp = good_primes(FIX, 100)
        assert 2 not in gp and 3 not in gp and 31 not in gp
        assert 5 in gp and 97 in gp


class TestErrorTaxonomy:
    def test_small_prime_unsupported(self):
        with pytest.raises(ConfigError):
            ap(FIX, 2)
        with pytest.raises(ConfigError):
            dim3_fp(FIX, 3)

    def test_composite_rejected(self):
        with pytest.raises(ConfigError):
            ap(FIX, 91)

    def test_bad_reduction(self):
        with pytest.raises(ReductionError):
            ap(FIX, 31)
        with pytest.raises(ReductionError):
            classify_prime(FIX, 31)

    def test_reduction_error_is_config_error(self):
        assert issubclass(ReductionError, ConfigError)

    def test_oversized_prime(self):
        with pytest.raises(ConfigError):
            ap(FIX, 10**6 + 3)


class TestAgainstBruteForce:
    def test_ap_and_dim_match_group_enumeration(self):
        for p in primes_upto(200):
            if p <= 3 or FIX.discriminant % p == 0:
                continue
            d1 = dim3_fp(FIX, p)
            bd, npts = brute_dim3(1, 1, p)
            assert npts == p + 1 - ap(FIX, p), p
            assert d1 == bd, p

    @pytest.mark.parametrize("a,b", [(1, 1), (0, 1), (1, -1), (2, 3)])
    def test_dim_fp2_matches_extension_scan(self, a, b):
        curve = CurveQ(a, b)
        for p in [5, 7, 11, 13, 17, 19, 23]:
            if curve.discriminant % p == 0:
                continue
            assert dim3_fp2(curve, p) == brute_dim3_fp2(a, b, p), (a, b, p)

    def test_ap_by_hand_small(self):
        # x^3 + x + 1 over F_5: squares are {0,1,4}; count points directly
        npts = len(curve_points(1, 1, 5))
        assert ap(FIX, 5) == 5 + 1 - npts

    @pytest.mark.parametrize("p", [9973, 10007, 10009, 10037])
    def test_root_counting_paths_agree(self, p):
        # the quartic root finder switches strategy at 10^4; check both sides
        # of the cutoff against a plain vectorised scan
        import numpy as np

        xs = np.arange(p, dtype=np.int64)
        psi = (3 * pow_mod(xs, 4, p) + 6 * pow_mod(xs, 2, p) + 12 * xs - 1) % p
        roots = xs[psi == 0]
        torsion = 1
        for r in roots:
            f = (int(r) ** 3 + int(r) + 1) % p
            chi = pow(f, (p - 1) // 2, p)
            if chi == 1:
                torsion += 2
            elif chi == 0:
                torsion += 1
        dim = {1: 0, 3: 1, 9: 2}[torsion]
        assert dim3_fp(FIX, p) == dim


class TestStructuralInvariants:
    def test_dimension_monotone_under_extension(self):
        for p in good_primes(FIX, 500):
            assert dim3_fp(FIX, p) <= dim3_fp2(FIX, p)

    def test_full_flag_needs_split_prime(self):
        # a full 3-torsion plane over F_p forces the Weil pairing to land in
        # F_p, so p = 1 mod 3
        for A, B in [(1, 1), (0, 1), (1, 0), (2, 3), (-1, 1)]:
            curve = CurveQ(A, B)
            for p in good_primes(curve, 400):
                if dim3_fp(curve, p) == 2:
                    assert p % 3 == 1, (A, B, p)

    def test_inert_prime_dichotomy(self):
        # for p = 2 mod 3 the Frobenius has non-square determinant, so its
        # order is 2 or 8 and the dimension pair is (1,2) or (0,0)
        for A, B in [(1, 1), (0, 1), (2, 3)]:
            curve = CurveQ(A, B)
            for p in good_primes(curve, 600):
                if p % 3 == 2:
                    pair = (dim3_fp(curve, p), dim3_fp2(curve, p))
                    assert pair in {(1, 2), (0, 0)}, (A, B, p, pair)

    def test_quadratic_twist_same_extension_dim(self):
        # the twist by -3 becomes isomorphic over the quadratic extension,
        # where every rational number is a square
        twist = CurveQ(9 * 1, -27 * 1, "fix-twist")
        for p in good_primes(FIX, 300):
            if twist.discriminant % p == 0:
                continue
            assert dim3_fp2(twist, p) == dim3_fp2(FIX, p), p

    def test_torsion_divides_point_count(self):
        for p in good_primes(FIX, 300):
            npts = p + 1 - ap(FIX, p)
            assert npts % 3 ** dim3_fp(FIX, p) == 0


@given(st.integers(-8, 8), st.integers(-8, 8), st.sampled_from([5, 7, 11, 13, 17, 19, 23, 29]))
@settings(max_examples=80, deadline=None)
def test_random_curves_match_brute_force(A, B, p):
    if 4 * A**3 + 27 * B**2 == 0:
        return
    curve = CurveQ(A, B)
    if curve.discriminant % p == 0:
        return
    bd, npts = brute_dim3(A % p, B % p, p)
    assert dim3_fp(curve, p) == bd
    assert ap(curve, p) == p + 1 - npts


class TestClassification:
    def test_record_fields(self):
        rec = classify_prime(FIX, 7)
        assert isinstance(rec, PrimeClassRecord)
        assert rec.label == "fix"
        assert rec.p == 7
        assert rec.split_in_F == (7 % 3 == 1)
        assert rec.class_k == rec.dim_fp
        expected_f = rec.dim_fp if rec.split_in_F else rec.dim_fp2
        assert rec.class_F == expected_f
        assert rec.in_DB_support == (rec.dim_fp != 2)

    def test_classify_range_structure(self):
        recs = classify_range(FIX, 300)
        assert [r.p for r in recs] == good_primes(FIX, 300)
        for r in recs:
            assert r.dim_fp <= r.dim_fp2
            if not r.split_in_F:
                assert (r.dim_fp, r.dim_fp2) in {(1, 2), (0, 0)}

    def test_parallel_equals_serial(self):
        ps = good_primes(FIX, 400)
        assert classify_primes(FIX, ps, jobs=1) == classify_primes(FIX, ps, jobs=3)

    def test_frobenius_class_consistent_with_dims(self):
        for p in good_primes(FIX, 300):
            cls = frobenius_class(FIX, p)
            assert cls.det == p % 3
            assert cls.trace == ap(FIX, p) % 3
            assert cls.fixed_dim == dim3_fp(FIX, p)

    def test_frobenius_square_has_extension_dim(self):
        from selmerfan.gl2f3 import fixed_dim, mul

        for p in good_primes(FIX, 300):
            g = frobenius_class(FIX, p).representative
            assert fixed_dim(mul(g, g)) == dim3_fp2(FIX, p)


class TestDensityReport:
    def test_shape_and_mass(self):
        report = density_report(FIX, 2000)
        assert report["primes"] > 0
        split_rows = [r for r in report["rows"] if r["coset"] == "split"]
        assert sum(r["empirical"] for r in split_rows) == pytest.approx(1.0)
        preds = sorted(r["predicted"] for r in split_rows)
        assert preds == pytest.approx(sorted([15 / 24, 8 / 24, 1 / 24]))
        assert report["inert_order2"]["predicted"] == 0.5

    def test_reuses_supplied_records(self):
        recs = classify_range(FIX, 1500)
        a = density_report(FIX, 1500, records=recs)
        b = density_report(FIX, 1500)
        assert a == b

    def test_small_range_rejected(self):
        with pytest.raises(ConfigError):
            density_report(FIX, 50)
