import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adicscope.diagram import DiagramError, ExpansionLimitError, product_matrix
from adicscope.eigen import classify_candidate
from adicscope.examples import build_example
from adicscope.residues import (bruteforce_tensor, compose_tensors, level_residue_counts,
                                progression_residues, range_residue_counts, sigma_sums,
                                suffix_set_bruteforce)

from helpers import cyclic_toy, oracle_histogram, suffix_lists, toeplitz_specs, toy_corpus


@given(st.integers(-50, 50), st.integers(-20, 20), st.integers(0, 60), st.integers(1, 13))
def test_progression_residues(start, step, count, modulus):
    expect = [0] * modulus
    for i in range(count):
        expect[(start + i * step) % modulus] += 1
    assert progression_residues(start, step, count, modulus) == expect


def tensor_as_dict(tensor):
    out = {}
    d = tensor.rank
    for t1 in range(1, d + 1):
        for t2 in range(1, d + 1):
            for k in range(tensor.modulus):
                c = tensor.count(t1, t2, k)
                if c:
                    out[(t1, t2, k)] = c
    return out


class TestAgainstOracle:
    @settings(max_examples=80, deadline=None)
    @given(toeplitz_specs(), st.integers(1, 12), st.data())
    def test_random_specs(self, spec, B, data):
        m = data.draw(st.integers(1, spec.depth - 1))
        n = data.draw(st.integers(m + 1, spec.depth))
        assert tensor_as_dict(range_residue_counts(spec, m, n, B)) == oracle_histogram(spec, m, n, B)

    def test_bruteforce_tensor_agrees(self):
        for spec in toy_corpus()[:6]:
            for B in (1, 5, 12):
                assert range_residue_counts(spec, 1, spec.depth, B) == bruteforce_tensor(spec, 1, spec.depth, B)

    def test_suffix_set(self):
        spec = cyclic_toy(3)
        ss = suffix_set_bruteforce(spec, 1, 2, 1, 1)
        assert ss.values == frozenset({3, 0})
        assert sorted(suffix_lists(spec, 1, 3)[(1, 1)]) == sorted(suffix_set_bruteforce(spec, 1, 3, 1, 1).values)

    def test_oracle_scale_guard(self):
        spec, _ = build_example(2, 4)
        with pytest.raises(ExpansionLimitError):
            suffix_set_bruteforce(spec, 2, 4, 1, 1)


class TestStructure:
    @settings(max_examples=40, deadline=None)
    @given(toeplitz_specs(min_depth=3), st.integers(1, 9))
    def test_marginal_is_product_matrix(self, spec, B):
        t = range_residue_counts(spec, 1, spec.depth, B)
        assert t.marginal() == product_matrix(spec, 1, spec.depth)

    @settings(max_examples=40, deadline=None)
    @given(toeplitz_specs(min_depth=4), st.integers(1, 9))
    def test_composition_is_associative(self, spec, B):
        a, b, c = (level_residue_counts(spec, n, B) for n in (2, 3, 4))
        assert compose_tensors(compose_tensors(a, b), c) == compose_tensors(a, compose_tensors(b, c))

    def test_collapse(self):
        spec = cyclic_toy(4)
        assert range_residue_counts(spec, 1, 4, 12).collapse(3) == range_residue_counts(spec, 1, 4, 3)
        with pytest.raises(DiagramError):
            range_residue_counts(spec, 1, 4, 12).collapse(5)

    def test_chain_mismatch(self):
        spec = cyclic_toy(4)
        with pytest.raises(DiagramError):
            compose_tensors(level_residue_counts(spec, 2, 3), level_residue_counts(spec, 4, 3))
        with pytest.raises(DiagramError):
            range_residue_counts(spec, 2, 5, 3)

    def test_tensor_is_read_only(self):
        t = range_residue_counts(cyclic_toy(3), 1, 3, 3)
        with pytest.raises(ValueError):
            t.counts[0, 0, 0] = 7

    def test_csv(self):
        t = range_residue_counts(cyclic_toy(3), 1, 2, 3)
        lines = t.to_csv().splitlines()
        assert lines[0] == "m,n,t1,t2,k,count"
        assert lines[1] == "1,2,1,1,0,2"
        assert len(lines) == 1 + 27

    def test_example_counts_are_exact_big_integers(self):
        spec, _ = build_example(2, 6)
        t = range_residue_counts(spec, 1, 6, 6)
        assert int(t.counts.sum()) == 7 * spec.p(6)
        assert t.counts.dtype == np.dtype(object)


class TestSigma:
    def test_matches_direct_sum(self):
        spec = cyclic_toy(4)
        cand = classify_candidate(spec, 1, 3)
        sig = sigma_sums(range_residue_counts(spec, 2, 4, 3), cand)
        sl = suffix_lists(spec, 2, 4)
        q = spec.q_range(2, 4)
        for (t1, t2), vals in sl.items():
            z = sum(cmath.exp(-2j * cmath.pi * (spec.p(2) * s % 3) / 3) for s in vals) / q
            assert abs(sig.normalized[t1 - 1][t2 - 1] - z) < 1e-12
            assert abs(sig.mass[t1 - 1][t2 - 1] - len(vals) / q) < 1e-15

    def test_modulus_mismatch(self):
        spec = cyclic_toy(3)
        with pytest.raises(DiagramError):
            sigma_sums(range_residue_counts(spec, 1, 3, 6), classify_candidate(spec, 1, 3))
