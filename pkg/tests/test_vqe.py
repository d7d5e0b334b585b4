from functools import reduce
from pathlib import Path

import numpy as np
import pytest

from symprep.ansatz_a import AnsatzOptions, build_general
from symprep.ansatz_e import e_ansatz
from symprep.core_sim import SizeError, run
from symprep.span_verify import freeze_circuit
from symprep.symmetry import (DomainError, SpinLayout, make_sector, number_op_diag, s2_matrix,
                              sector_indices)
from symprep.vqe import (ANSATZ_TABLE_REFERENCE, Hamiltonian, HamiltonianParseError, PauliTerm, VqeConfig, apply_hamiltonian,
                         exact_ground, expectation, from_terms, load_synthetic, parse_hamiltonian,
                         random_number_conserving, random_spin_free, singlet_triplet_report,
                         synthetic_set, vqe_minimize, write_synthetic_set)

PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
         "Z": np.diag([1.0, -1.0])}
FAST = VqeConfig(restarts=2)


def dense(h):
    """Kronecker-product oracle, qubit 1 leftmost."""
    return sum(t.coeff * reduce(np.kron, [PAULI[c] for c in t.ops]) for t in h.terms)


class TestParse:
    def test_single(self):
        h = parse_hamiltonian("-0.5 ZIII")
        assert h.n == 4 and h.terms == (PauliTerm(-0.5, "ZIII"),)

    def test_merge(self):
        h = parse_hamiltonian("0.25 XXYY\n0.25 XXYY")
        assert h.terms == (PauliTerm(0.5, "XXYY"),)

    def test_comments_and_blanks(self):
        h = parse_hamiltonian("# header\n\n1.0 ZZ\n  # more\n-2 XX\n")
        assert [t.ops for t in h.terms] == ["ZZ", "XX"]

    @pytest.mark.parametrize("text,line", [("1.0 ABCD", 1), ("1.0 ZZ\n1.0 ZZZ", 2), ("x ZZ", 1),
                                           ("1.0 ZZ\n\n1.0", 3), ("nan ZZ", 1), ("1 ZZ extra", 1),
                                           ("", 0), ("# nothing", 0)])
    def test_errors(self, text, line):
        with pytest.raises(HamiltonianParseError) as e:
            parse_hamiltonian(text)
        assert e.value.line == line
        assert str(e.value).startswith(f"line {line}:")

    def test_explicit_n(self):
        with pytest.raises(HamiltonianParseError):
            parse_hamiltonian("1.0 ZZ", n=3)

    def test_text_round_trip(self, rng):
        h = random_number_conserving(4, rng)
        assert parse_hamiltonian(h.to_text()) == h

    def test_invalid_terms(self):
        with pytest.raises(DomainError):
            Hamiltonian(2, (PauliTerm(1.0, "ZZZ"),))
        with pytest.raises(DomainError):
            from_terms([])


class TestExpectation:
    def test_examples(self):
        z, x = parse_hamiltonian("1.0 Z"), parse_hamiltonian("1.0 X")
        e0 = np.array([1.0, 0.0])
        assert expectation(z, e0) == 1.0
        assert expectation(x, e0) == 0.0

    def test_dense_oracle(self, rng):
        for _ in range(10):
            terms = [(rng.normal(), "".join(rng.choice(list("IXYZ"), 4))) for _ in range(12)]
            h = from_terms(terms, 4)
            psi = rng.normal(size=16) + 1j * rng.normal(size=16)
            psi /= np.linalg.norm(psi)
            M = dense(h)
            assert expectation(h, psi) == pytest.approx(np.vdot(psi, M @ psi).real, abs=1e-10)
            np.testing.assert_allclose(h.sparse().toarray(), M, atol=1e-14)
            np.testing.assert_allclose(apply_hamiltonian(h, psi), M @ psi, atol=1e-12)

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            expectation(parse_hamiltonian("1 ZZ"), np.ones(8) / np.sqrt(8))


class TestExactGround:
    def test_examples(self):
        e, v = exact_ground(parse_hamiltonian("-1.0 X"))
        assert e == pytest.approx(-1)
        e, v = exact_ground(parse_hamiltonian("1.0 ZZ"), make_sector(2, 1))
        assert e == pytest.approx(-1)
        assert abs(v[0]) < 1e-12 and abs(v[3]) < 1e-12

    def test_blockwise_matches_full(self, rng):
        for _ in range(5):
            h = random_number_conserving(4, rng)
            full = exact_ground(h)[0]
            blocks = [exact_ground(h, make_sector(4, m))[0] for m in range(1, 4)]
            corner = [np.linalg.eigvalsh(dense(h)[np.ix_(i, i)])[0] for i in ([0], [15])]
            assert full == pytest.approx(min(blocks + corner), abs=1e-10)

    def test_sector_oracle(self, rng):
        h = random_number_conserving(4, rng)
        idx = sector_indices(make_sector(4, 2))
        want = np.linalg.eigvalsh(dense(h)[np.ix_(idx, idx)])[0]
        assert exact_ground(h, make_sector(4, 2))[0] == pytest.approx(want, abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(DomainError):
            exact_ground(Hamiltonian(13, (PauliTerm(1.0, "Z" * 13),)))


class TestRandomHamiltonians:
    def test_number_conserving(self, rng):
        N = np.diag(number_op_diag(5))
        for _ in range(5):
            M = dense(random_number_conserving(5, rng))
            np.testing.assert_allclose(M @ N, N @ M, atol=1e-12)
            np.testing.assert_allclose(M, M.conj().T, atol=1e-14)

    @pytest.mark.parametrize("layout", [SpinLayout.INTERLEAVED, SpinLayout.BLOCK])
    def test_spin_free(self, layout, rng):
        S2 = s2_matrix(4, layout).toarray()
        for _ in range(5):
            M = dense(random_spin_free(4, rng, layout))
            np.testing.assert_allclose(M @ S2, S2 @ M, atol=1e-12)

    def test_shipped_set_matches_generator(self, tmp_path):
        for name, h in synthetic_set().items():
            assert load_synthetic(name) == h
        paths = write_synthetic_set(tmp_path)
        shipped = Path(__file__).parents[1] / "src" / "symprep" / "data" / "hamiltonians"
        for p in paths:
            assert p.read_text() == (shipped / p.name).read_text()


class TestVqe:
    def test_reaches_sector_ground(self, rng):
        h = random_number_conserving(4, rng)
        r = vqe_minimize(h, build_general(4, 2), FAST, sector=make_sector(4, 2))
        assert r.delta_e < 1e-6 and r.delta_e > -1e-9

    def test_singlet_ansatz(self, rng):
        h = random_number_conserving(4, rng)
        r = vqe_minimize(h, e_ansatz(4, 2, s=0, sz=0), FAST, layout=SpinLayout.INTERLEAVED)
        assert abs(r.s2) < 1e-8 and abs(r.sz) < 1e-12
        assert r.energy >= exact_ground(h, make_sector(4, 2, sz=0, s=0, layout="interleaved"))[0] - 1e-9

    def test_zero_params(self):
        h = parse_hamiltonian("1.0 ZZ\n0.5 XX")
        c = freeze_circuit(build_general(2, 1), [])
        r = vqe_minimize(h, c)
        assert r.evaluations == 1 and r.iterations == 0
        assert r.energy == pytest.approx(expectation(h, run(c, [])))

    def test_reproducible(self, rng):
        h = random_number_conserving(4, rng)
        c = build_general(4, 2, AnsatzOptions(time_reversal=True))
        a, b = vqe_minimize(h, c, FAST), vqe_minimize(h, c, FAST)
        assert a.to_dict() == b.to_dict()
        t = vqe_minimize(h, c, VqeConfig(restarts=2, threads=2))
        assert t.to_dict() == a.to_dict()

    def test_history_decreases_overall(self, rng):
        h = random_number_conserving(4, rng)
        r = vqe_minimize(h, build_general(4, 2), FAST)
        assert r.history[-1][1] <= r.history[0][1]
        assert r.energy == pytest.approx(r.history[-1][1])

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            vqe_minimize(parse_hamiltonian("1 ZZZ"), build_general(4, 2))


class TestSpinReport:
    def test_rows(self, rng):
        h = random_spin_free(4, rng)
        rep = singlet_triplet_report(
            h, [("E42s0", e_ansatz(4, 2, s=0, sz=0)),
                ("A42sz0", build_general(4, 2, AnsatzOptions(sz=0)))], 2,
            layouts={"A42sz0": SpinLayout.BLOCK}, config=FAST)
        e_row, a_row = rep.rows
        assert e_row.s2 == pytest.approx(0, abs=1e-8)
        assert a_row.sz == pytest.approx(0, abs=1e-12)
        e0 = exact_ground(h, make_sector(4, 2, sz=0, s=0, layout="interleaved"))[0]
        e1 = exact_ground(h, make_sector(4, 2, sz=0, s=1, layout="interleaved"))[0]
        assert rep.gap == pytest.approx(e1 - e0)
        assert e_row.energy == pytest.approx(e0, abs=1e-6)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "ansatz,energy,s2,sz" and lines[-1].startswith("exact_triplet,")


class TestReferenceTable:
    def test_param_counts_match_ansatze(self):
        ours = {"A42sz0": build_general(4, 2, AnsatzOptions(sz=0, time_reversal=True)).n_free,
                "E42": e_ansatz(4, 2).n_free, "E42s0": e_ansatz(4, 2, s=0, sz=0).n_free}
        for k, v in ours.items():
            assert ANSATZ_TABLE_REFERENCE[k][1] == v
