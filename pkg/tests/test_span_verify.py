import numpy as np
import pytest

from symprep.ansatz_a import AnsatzOptions, build_fig1, build_fig3, build_fig4, build_general
from symprep.ansatz_e import e_ansatz
from symprep.core_sim import run
from symprep.span_verify import (FrozenState, VerifyConfig, fidelity_sweep, freeze, freeze_circuit,
                                 max_overlap, random_sector_state, span_fidelity, sweep_csv,
                                 unfreeze_schedule)
from symprep.symmetry import SpinLayout, make_sector, sector_indices

QUICK = VerifyConfig(n_targets=20)
QUICK_REAL = VerifyConfig(n_targets=20, real_targets=True)


class TestTargets:
    def test_support(self, rng):
        sec = make_sector(2, 1)
        for _ in range(20):
            a = random_sector_state(sec, False, rng).amps
            assert a[0] == 0 and a[3] == 0
            assert np.linalg.norm(a) == pytest.approx(1)

    def test_triplet_unique(self, rng):
        sec = make_sector(4, 2, sz=0, s=1, layout=SpinLayout.INTERLEAVED)
        want = np.zeros(16)
        want[[0b1001, 0b0110]] = 2 ** -0.5
        for _ in range(10):
            a = random_sector_state(sec, True, rng).amps
            assert abs(abs(a @ want) - 1) < 1e-12

    def test_uniform_weights(self, rng):
        sec = make_sector(4, 2)
        idx = sector_indices(sec)
        N = 10_000
        p = np.array([np.abs(random_sector_state(sec, False, rng).amps[idx]) ** 2 for _ in range(N)])
        # per-state probability is Beta(1, 5): variance 5 / 252
        sigma = np.sqrt(5 / 252 / N)
        assert np.all(np.abs(p.mean(axis=0) - 1 / 6) < 3 * sigma)

    def test_real_targets(self, rng):
        a = random_sector_state(make_sector(4, 2), True, rng).amps
        assert np.all(a.imag == 0)


class TestMaxOverlap:
    def test_identity_case(self, rng):
        c = build_general(4, 2)
        t = run(c, rng.uniform(0, 2 * np.pi, c.n_free)).amps
        assert max_overlap(c, t)[0] >= 1 - 1e-6

    def test_fig1_bell(self):
        t = np.array([0, 1, 1, 0]) / np.sqrt(2)
        f, x = max_overlap(build_fig1(), t)
        assert f >= 1 - 1e-6

    def test_fig1_theta_frozen(self):
        c = freeze_circuit(build_fig1(), [1])
        t = np.array([0, 0.6, 0.8j, 0])
        assert max_overlap(c, t)[0] < 1 - 1e-3

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            max_overlap(build_fig1(), np.ones(8) / np.sqrt(8))

    def test_no_free_params(self):
        c = freeze_circuit(build_fig1(), [])
        f, x = max_overlap(c, np.array([0, 0, 1, 0]))
        assert f == pytest.approx(1) and len(x) == 0


class TestSpanFidelity:
    def test_general_spans(self):
        r = span_fidelity(build_general(4, 2), make_sector(4, 2), QUICK)
        assert r.mean >= 0.999 and r.n_params == 10

    def test_fig4_spans(self):
        assert span_fidelity(build_fig4(), make_sector(4, 2), QUICK).mean >= 0.999

    def test_three_tr_params(self):
        c = build_general(4, 2, AnsatzOptions(time_reversal=True))
        r = span_fidelity(freeze(c, [0, 1, 2]), make_sector(4, 2), QUICK_REAL)
        assert abs(r.mean - 0.84) < 0.05

    @pytest.mark.parametrize("fix,ok", [(0, False), (1, False), (2, False), (3, True), (4, True), (5, False)])
    def test_fig3_tr_fix_choice(self, fix, ok):
        r = span_fidelity(build_fig3(time_reversal=True, tr_fix=fix), make_sector(4, 2), QUICK_REAL)
        assert (r.mean >= 1 - 1e-4) is ok
        if not ok:
            assert r.mean < 1 - 1e-3

    def test_deterministic(self):
        a = span_fidelity(build_general(3, 1), make_sector(3, 1), QUICK)
        b = span_fidelity(build_general(3, 1), make_sector(3, 1), QUICK)
        assert a.fidelities == b.fidelities

    def test_threads_match_serial(self):
        c, sec = build_general(3, 1), make_sector(3, 1)
        a = span_fidelity(c, sec, QUICK)
        b = span_fidelity(c, sec, VerifyConfig(n_targets=20, threads=4))
        assert a.fidelities == b.fidelities

    def test_bounds(self):
        r = span_fidelity(freeze_circuit(build_general(4, 2), [0, 1]), make_sector(4, 2), QUICK)
        assert 0 <= r.min <= r.mean <= 1
        assert r.failures > 0

    def test_e_state(self):
        sec = make_sector(4, 2, sz=0, s=0, layout=SpinLayout.INTERLEAVED)
        r = span_fidelity(e_ansatz(4, 2, s=0, sz=0), sec, QUICK_REAL)
        assert r.mean >= 1 - 1e-4 and r.n_params == 2


class TestSweep:
    def test_unfreeze_schedule(self):
        assert unfreeze_schedule([3, 1, 2]) == [[], [3], [3, 1], [3, 1, 2]]
        assert unfreeze_schedule(range(4), [1, 3]) == [[0], [0, 1, 2]]

    def test_e42_singlet_curve(self):
        sec = make_sector(4, 2, sz=0, s=0, layout=SpinLayout.INTERLEAVED)
        rows = fidelity_sweep(e_ansatz(4, 2, s=0, sz=0), sec, unfreeze_schedule(range(2)), QUICK_REAL)
        assert [k for k, _ in rows] == [0, 1, 2]
        assert rows[-1][1].mean >= 1 - 1e-4
        assert rows[0][1].mean < rows[1][1].mean < rows[2][1].mean

    def test_overparameterized(self):
        sec = make_sector(3, 1)
        c = build_general(3, 1)
        r = span_fidelity(c, sec, QUICK)
        assert r.mean >= 1 - 1e-4

    def test_frozen_state(self):
        e = e_ansatz(4, 2)
        fz = FrozenState(e, [2])
        np.testing.assert_allclose(fz.amps([0.4]), e.amps([0, 0, 0.4, 0, 0]))

    def test_freeze_circuit_validation(self):
        with pytest.raises(ValueError):
            freeze_circuit(build_fig1(), [0, 0])

    def test_csv(self):
        sec = make_sector(2, 1)
        rows = fidelity_sweep(build_fig1(), sec, [[0, 1]], VerifyConfig(n_targets=3))
        text = sweep_csv(rows)
        assert text.splitlines()[0] == "params,fidelity,min_fidelity,failures"
        assert text.splitlines()[1].startswith("2,1.0000000000")
