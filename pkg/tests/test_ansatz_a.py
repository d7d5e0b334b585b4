from math import comb

import numpy as np
import pytest

from conftest import phase_aligned
from symprep.ansatz_a import (SZ_IDENTIFICATIONS, AnsatzOptions, auto_x_placement, build_fig1, build_fig3,
                              build_fig4, build_general, build_sz, build_sz_fig_s5, fig3_tr_closed_form,
                              fig_s5_closed_form, fig_s5_mapping, free_param_count, general_layout,
                              primitive_pattern)
from symprep.core_sim import expand_a_gates, run, tangent_rank
from symprep.symmetry import DomainError, SpinLayout, apply_number, apply_sz, make_sector, sector_indices

ALL_NM = [(n, m) for n in range(2, 7) for m in range(1, n)]


def _amps_dict(amps, n):
    return {format(k, f"0{n}b"): a for k, a in enumerate(amps) if abs(a) > 1e-13}


class TestGeneral:
    def test_small_examples(self):
        c = build_general(2, 1)
        assert c.count("X") == 1 and c.count("A") == 1 and c.n_free == 2
        c = build_general(4, 2)
        assert c.count("A") == 6 and c.n_free == 10

    @pytest.mark.parametrize("n,m", ALL_NM)
    def test_gate_and_param_counts(self, n, m):
        c = build_general(n, m)
        assert c.count("A") == (1 if n == 2 else comb(n, m))
        assert c.count("X") == m
        assert c.n_free == 2 * comb(n, m) - 2
        tr = build_general(n, m, AnsatzOptions(time_reversal=True))
        assert tr.n_free == comb(n, m) - 1

    @pytest.mark.parametrize("n,m", ALL_NM)
    def test_full_tangent_rank(self, n, m):
        assert tangent_rank(build_general(n, m)) == 2 * comb(n, m) - 2
        assert tangent_rank(build_general(n, m, AnsatzOptions(time_reversal=True))) == comb(n, m) - 1

    @pytest.mark.parametrize("n,m", ALL_NM)
    def test_number_conservation(self, n, m, rng):
        c = build_general(n, m)
        idx = sector_indices(make_sector(n, m))
        for _ in range(200):
            a = run(c, rng.uniform(-7, 7, c.n_free)).amps
            assert 1 - np.sum(np.abs(a[idx]) ** 2) < 1e-12

    @pytest.mark.parametrize("n,m", ALL_NM)
    def test_tr_states_are_real(self, n, m, rng):
        c = build_general(n, m, AnsatzOptions(time_reversal=True))
        for _ in range(20):
            a = run(c, rng.uniform(-7, 7, c.n_free)).amps
            assert np.abs(phase_aligned(np.abs(a), a).imag).max() < 1e-12

    def test_tr_fixes_theta(self):
        spec, _, pattern = general_layout(4, 2, AnsatzOptions(time_reversal=True))
        assert pattern == [1, 3, 2]
        assert spec.theta[3] == 0.0 and all(p == 0.0 for p in spec.phi)
        alt = build_general(4, 2, AnsatzOptions(time_reversal=True, tr_fix=4))
        assert alt.n_free == 5

    def test_primitive_patterns(self):
        assert primitive_pattern(4, [2, 4]) == [1, 3, 2]
        assert primitive_pattern(6, auto_x_placement(6, 3)) == [1, 3, 5, 2, 4]
        assert primitive_pattern(6, auto_x_placement(6, 2)) == [1, 4, 2, 3, 5]

    def test_auto_placement(self):
        assert auto_x_placement(4, 2) == [1, 3]
        assert auto_x_placement(6, 2) == [2, 5]
        assert auto_x_placement(6, 3) == [1, 3, 5]

    def test_particle_hole_reflection(self):
        c = build_general(5, 3)
        assert c.count("X") == 3 and c.count("A") == 10
        assert apply_number(run(c, np.full(c.n_free, 0.3)))[0] == pytest.approx(3)

    def test_explicit_placement(self):
        c = build_general(4, 2, AnsatzOptions(x_placement=(2, 3)))
        a = run(c, np.full(c.n_free, 0.4)).amps
        assert apply_number(a)[0] == pytest.approx(2)
        with pytest.raises(DomainError):
            build_general(4, 2, AnsatzOptions(x_placement=(1, 1)))

    def test_invalid(self):
        for n, m in ((4, 0), (4, 4), (3, 5)):
            with pytest.raises(DomainError):
                build_general(n, m)


class TestSzVariant:
    def test_param_counts(self):
        assert free_param_count(4, 2, AnsatzOptions(sz=0, time_reversal=True)) == 3
        assert free_param_count(6, 2, AnsatzOptions(sz=0, time_reversal=True)) == 8

    def test_table_keeps_rank(self):
        for (n, m, sz2, tr), fix in SZ_IDENTIFICATIONS.items():
            c = build_sz(n, m, sz2 / 2, tr)
            d = len(sector_indices(make_sector(n, m, sz=sz2 / 2, layout="block")))
            target = d - 1 if tr else 2 * d - 2
            assert c.n_free == target == tangent_rank(c)

    @pytest.mark.parametrize("n,m,sz", [(4, 2, 0), (6, 2, 0), (4, 1, 0.5), (6, 3, 0.5)])
    def test_sz_conservation(self, n, m, sz, rng):
        if (n, m, 2 * sz) not in [(k[0], k[1], k[2]) for k in SZ_IDENTIFICATIONS]:
            # non-tabulated sectors use the search; keep them on the cheap greedy path
            c = build_sz(n, m, sz, identifications=())
        else:
            c = build_sz(n, m, sz)
        for _ in range(200):
            mean, var = apply_sz(run(c, rng.uniform(-7, 7, c.n_free)), SpinLayout.BLOCK)
            assert mean == pytest.approx(sz, abs=1e-12) and var < 1e-12

    def test_bridging_gates_fixed(self):
        c = build_sz(6, 2, 0)
        for g in c.gates:
            if g.kind == "A" and g.targets == (3, 4):
                assert all(p.value() == 0.0 for p in g.params)

    def test_sz_needs_even_n(self):
        with pytest.raises(DomainError):
            build_sz(5, 2, 0)


class TestFixtures:
    def test_fig1(self):
        c = build_fig1()
        assert c.n_free == 2 and c.count("A") == 1

    def test_fig3(self, rng):
        c = build_fig3()
        assert c.n_free == 10 and c.count("A") == 6
        a_gates = [g for g in c.gates if g.kind == "A"]
        assert [g.targets for g in a_gates] == [(1, 2), (3, 4), (2, 3), (1, 2), (3, 4), (2, 3)]
        assert a_gates[0].params[1] == a_gates[1].params[1] == a_gates[2].params[1]
        idx = sector_indices(make_sector(4, 2))
        for _ in range(100):
            a = run(c, rng.uniform(-7, 7, 10)).amps
            assert 1 - np.sum(np.abs(a[idx]) ** 2) < 1e-12

    def test_fig3_tr_closed_form(self, rng):
        c = build_fig3(time_reversal=True)
        for _ in range(100):
            t = rng.uniform(-np.pi, np.pi, 5)
            got = _amps_dict(run(c, t).amps, 4)
            want = fig3_tr_closed_form(t)
            # equal up to a global sign
            sign = np.sign(sum(got.get(k, 0).real * v for k, v in want.items()))
            assert sum(abs(v) ** 2 for v in want.values()) == pytest.approx(1)
            for k, v in want.items():
                assert abs(sign * got.get(k, 0) - v) < 1e-10

    def test_fig4(self):
        from symprep.gate_counts import count_circuit_cnots
        c = build_fig4()
        assert c.n_free == 10 and count_circuit_cnots(c) == 9
        cn = [g.targets[0] - g.controls[0][0] for g in expand_a_gates(c).gates if g.kind == "CNOT"]
        assert 2 in cn   # non-adjacent couplings 1->3 and 2->4

    def test_fig_s5(self, rng):
        c = build_sz_fig_s5()
        assert c.n_free == 3
        for _ in range(100):
            t = rng.uniform(-np.pi, np.pi, 3)
            mean, var = apply_sz(run(c, t), SpinLayout.BLOCK)
            assert abs(mean) < 1e-12 and var < 1e-12
            args, relabel = fig_s5_mapping(*t)
            want = {relabel(k): v for k, v in fig_s5_closed_form(*args).items()}
            got = _amps_dict(run(c, t).amps, 4)
            sign = np.sign(sum(got.get(k, 0).real * v for k, v in want.items())) or 1
            for k, v in want.items():
                assert abs(sign * got.get(k, 0) - v) < 1e-10
