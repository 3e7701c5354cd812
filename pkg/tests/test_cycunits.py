import random

import numpy as np
import pytest

from capitula import cycunits as cu
from capitula import iwasawa as iw
from capitula import quadforms as qf
from capitula.arith import is_prime
from capitula.errors import (BadAuxPrime, ChiOrderNotCoprime, ParseError,
                             RingMismatch)


def aux_primes(ell, p, N, count):
    stream = cu._aux_prime_stream(ell, p, N)
    return [next(stream) for _ in range(count)]


class TestSymbols:
    def test_make_canonicalizes(self):
        s = cu.CyclotomicUnitSymbol.make(13, {2: 1, 11: 2, 5: -1})
        # 11 = -2 mod 13 folds onto 2
        assert s.exps == ((2, 3), (5, -1))

    def test_zero_exponents_dropped(self):
        s = cu.CyclotomicUnitSymbol.make(13, {2: 1, 11: -1})
        assert s.exps == ()

    def test_a_zero_rejected(self):
        with pytest.raises(ValueError):
            cu.CyclotomicUnitSymbol.make(13, {13: 1})

    def test_generator(self):
        s = cu.CyclotomicUnitSymbol.generator(13)
        assert s.exps == ((2, 1),)

    def test_apply_identity(self):
        s = cu.CyclotomicUnitSymbol.generator(13)
        assert s.apply(1) == s

    def test_apply_composes(self):
        rng = random.Random(5)
        for _ in range(20):
            ell = 13
            s = cu.CyclotomicUnitSymbol.make(
                ell, {rng.randrange(1, ell): rng.randrange(-2, 3) for _ in range(3)}
            )
            a = rng.randrange(1, ell)
            b = rng.randrange(1, ell)
            assert s.apply(a).apply(b) == s.apply(a * b % ell)


class TestUnitImage:
    def test_trivial_symbol_is_zero(self):
        q = aux_primes(13, 3, 2, 1)[0]
        u = cu.CyclotomicUnitSymbol.make(13, {})
        assert not cu.unit_image_mod_q(u, q, 3, 2).any()

    def test_bad_aux_prime(self):
        u = cu.CyclotomicUnitSymbol.generator(13)
        with pytest.raises(BadAuxPrime):
            cu.unit_image_mod_q(u, 11, 3, 2)

    def test_bad_aux_prime_sign_at_two(self):
        # q = 1 mod 13*4 but not mod 13*8: sign of units still visible
        u = cu.CyclotomicUnitSymbol.generator(13)
        q = 157  # 157 - 1 = 12*13, divisible by 13*4 but not 13*8
        assert (q - 1) % (13 * 4) == 0 and (q - 1) % (13 * 8) != 0
        with pytest.raises(BadAuxPrime):
            cu.unit_image_mod_q(u, q, 2, 2)

    def test_galois_equivariance(self):
        # image of sigma^k(u) is the k-step cyclic shift of image of u
        rng = random.Random(7)
        ell, p, N = 13, 3, 2
        half = (ell - 1) // 2
        g0 = 2
        qs = aux_primes(ell, p, N, 5)
        for _ in range(50):
            u = cu.CyclotomicUnitSymbol.make(
                ell, {rng.randrange(1, ell): rng.randrange(-2, 3) for _ in range(3)}
            )
            k = rng.randrange(half)
            q = rng.choice(qs)
            v = cu.unit_image_mod_q(u, q, p, N)
            w = cu.unit_image_mod_q(u.apply(pow(g0, k, ell)), q, p, N)
            # v[-e] = dlog(sigma^e u), so sigma^k shifts the index by k
            assert all(
                w[(-e) % half] == v[(-(e + k)) % half] for e in range(half)
            )

    def test_image_is_deterministic(self):
        u = cu.CyclotomicUnitSymbol.generator(13)
        q = aux_primes(13, 3, 2, 1)[0]
        a = cu.unit_image_mod_q(u, q, 3, 2)
        b = cu.unit_image_mod_q(u, q, 3, 2)
        assert (a == b).all()


class TestComputeFittingIdeal:
    def test_example_quadratic(self):
        rec = cu.compute_fitting_ideal(2089, 3, 2, N=3)
        R = rec.ring()
        assert (rec.n, rec.N) == (2, 3)
        assert rec.ideal() == iw.ideal_make(R, ["T-3", "27"])
        assert rec.provenance == "computed"
        assert rec.stabilization_count >= 5
        assert len(rec.aux_primes_used) >= 4

    def test_example_cubic_7489(self):
        rec = cu.compute_fitting_ideal(7489, 2, 3, chi_id=2, N=3)
        R = rec.ring()
        assert rec.ideal() == iw.ideal_make(R, ["T+2+4*z", "8"])

    def test_example_cubic_9337(self):
        rec = cu.compute_fitting_ideal(9337, 2, 3, chi_id=1, N=3)
        R = rec.ring()
        assert rec.ideal() == iw.ideal_make(R, ["T+4-2*z", "8"])

    def test_conjugate_character_gives_conjugate_ideal(self):
        # z -> -1-z on O = Z2[z]/(z^2+z+1) swaps the two cubic characters
        rec1 = cu.compute_fitting_ideal(9337, 2, 3, chi_id=1, N=3)
        rec2 = cu.compute_fitting_ideal(9337, 2, 3, chi_id=2, N=3)
        R = rec1.ring()
        conj = []
        for g in rec1.generators:
            e = iw.parse_element(R, g)
            arr = e.arr
            new = np.zeros_like(arr)
            new[:, 0] = (arr[:, 0] - arr[:, 1]) % R.mod
            new[:, 1] = (-arr[:, 1]) % R.mod
            conj.append(iw.RingElement(R, new))
        assert rec2.ideal() == iw.ideal_make(R, conj, scalar_hint=3)

    def test_determinism(self):
        a = cu.compute_fitting_ideal(229, 3, 2, N=3, seed=1)
        b = cu.compute_fitting_ideal(229, 3, 2, N=3, seed=1)
        assert a == b

    def test_default_precision(self):
        rec = cu.compute_fitting_ideal(13, 3, 2)
        assert rec.N == rec.n + 3
        assert rec.n == cu.tower_exponent(13, 3) == 1

    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            cu.compute_fitting_ideal(15, 3, 2)

    def test_rejects_chi_order_sharing_p(self):
        with pytest.raises(ChiOrderNotCoprime):
            cu.compute_fitting_ideal(13, 3, 3)

    def test_rejects_chi_order_not_dividing(self):
        with pytest.raises(ValueError):
            cu.compute_fitting_ideal(13, 3, 5)

    def test_cross_check_small(self):
        # eigenspace order from the sampled ideal vs the 3-part of the
        # narrow class group computed from binary quadratic forms
        for ell in range(13, 600, 12):
            if not is_prime(ell):
                continue
            rec = cu.compute_fitting_ideal(ell, 3, 2)
            order = iw.eigenspace_class_order(rec.ring(), rec.ideal())
            part = 1
            for v in qf.p_part(qf.class_group(ell), 3):
                part *= v
            assert order == part, ell

    def test_choices_recorded(self):
        rec = cu.compute_fitting_ideal(229, 3, 2, N=3)
        keys = dict(rec.choices)
        assert "unit" in keys and "work_precision" in keys


class TestTowerExponent:
    def test_values(self):
        assert cu.tower_exponent(2089, 3) == 2
        assert cu.tower_exponent(7489, 2) == 5
        assert cu.tower_exponent(9337, 2) == 2
        assert cu.tower_exponent(13, 3) == 1

    def test_aux_prime_stream(self):
        qs = aux_primes(13, 3, 2, 5)
        assert qs == sorted(qs)
        for q in qs:
            assert is_prime(q) and (q - 1) % (13 * 9) == 0

    def test_aux_prime_stream_p2_sign(self):
        for q in aux_primes(13, 2, 3, 5):
            assert (q - 1) % (13 * 16) == 0


class TestTables:
    def test_roundtrip(self, tmp_path):
        rec = cu.compute_fitting_ideal(2089, 3, 2, N=3)
        path = tmp_path / "table.txt"
        cu.export_table([rec], path)
        back = cu.ingest_table(path)
        assert len(back) == 1
        got = back[0]
        assert got.provenance == "ingested"
        assert (got.ell, got.p, got.chi_order, got.n, got.N) == (2089, 3, 2, 2, 3)
        assert got.ideal() == rec.ideal()
        assert got.ideal().scalar_level == 3

    def test_ingest_example_line(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text(
            "# published ideals\n"
            "ell=2089 p=3 chi=2 n=2 prec=3 gens=[T-3,27]\n"
            "\n"
            "ell=9337 p=2 chi=3 n=2 prec=3 gens=[T+4-2*z,8]\n"
        )
        recs = cu.ingest_table(path)
        assert [r.ell for r in recs] == [2089, 9337]
        R = recs[0].ring()
        assert iw.eigenspace_class_order(R, recs[0].ideal()) == 3

    def test_ingest_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        assert cu.ingest_table(path) == []

    def test_parse_error_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("ell=2089 p=3 chi=2 n=2 prec=3 gens=[T-3,27]\ngens=[T-3\n")
        with pytest.raises(ParseError) as exc:
            cu.ingest_table(path)
        assert exc.value.line == 2

    def test_parse_error_bad_element(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("ell=2089 p=3 chi=2 n=2 prec=3 gens=[T-3, T**]\n")
        with pytest.raises(ParseError):
            cu.ingest_table(path)

    def test_ring_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        # chi order shares a factor with p: no such ring
        path.write_text("ell=2089 p=3 chi=3 n=2 prec=3 gens=[T-3,27]\n")
        with pytest.raises(RingMismatch):
            cu.ingest_table(path)

    def test_cache_dir_env(self, monkeypatch):
        monkeypatch.setenv("CAPITULA_CACHE", "/tmp/somewhere")
        assert cu.cache_dir() == "/tmp/somewhere"
        monkeypatch.delenv("CAPITULA_CACHE")
        assert cu.cache_dir("fallback") == "fallback"
