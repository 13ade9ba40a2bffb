import math
import warnings

import pytest

from cascade_lab.enumeration import (
    EnumerationCeilingError,
    enumerate_metrics,
    enumerate_sequences,
    expected_total_reward_exact,
    outcome_distribution,
    social_response_matrix,
)
from cascade_lab.model import Binary, Competitive, Condorcet, SignalModel
from cascade_lab.rewards import cjt_accuracy
from oracles import binomial_pmf, naive_enumeration

SCHEMES = [Binary(), Competitive(0.6), Competitive(1.5), Condorcet()]


class TestSmallCases:
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_single_agent(self, scheme, model23):
        m = enumerate_metrics(1, scheme, model23)
        assert m.collective_accuracy == pytest.approx(2 / 3, abs=1e-12)
        assert m.individual_accuracy == pytest.approx(2 / 3, abs=1e-12)

    def test_three_condorcet(self, model23):
        m = enumerate_metrics(3, Condorcet(), model23)
        assert m.collective_accuracy == pytest.approx(20 / 27, abs=1e-12)

    def test_three_condorcet_distribution(self, model23):
        dist = outcome_distribution(3, Condorcet(), model23)
        assert dist.probabilities == pytest.approx([1 / 27, 6 / 27, 12 / 27, 8 / 27], abs=1e-12)

    def test_even_n_rejected(self, model23):
        with pytest.raises(ValueError):
            enumerate_metrics(4, Binary(), model23)

    def test_even_n_distribution_allowed(self, model23):
        assert sum(outcome_distribution(4, Binary(), model23).probabilities) == pytest.approx(1.0, abs=1e-12)

    def test_ceiling(self, model23):
        with pytest.raises(EnumerationCeilingError):
            outcome_distribution(32, Binary(), model23)

    def test_warns_above_25(self, model23, monkeypatch):
        import cascade_lab.enumeration as en

        monkeypatch.setattr(en, "WARN_N", 5)
        with pytest.warns(RuntimeWarning):
            en.outcome_distribution(6, Binary(), model23)


class TestRewards:
    def test_single_binary(self, model23):
        assert expected_total_reward_exact(1, Binary(), model23) == pytest.approx(2 / 3, abs=1e-12)

    def test_single_condorcet(self, model23):
        assert expected_total_reward_exact(1, Condorcet(), model23) == pytest.approx(2 / 3, abs=1e-12)

    def test_three_condorcet_independence_oracle(self, model23):
        pmf = binomial_pmf(3, 2 / 3)
        want = math.fsum(p * sum(2.0**-i for i in range(k)) for k, p in enumerate(pmf))
        assert expected_total_reward_exact(3, Condorcet(), model23) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("n", [2, 5, 8, 11])
def test_matches_naive_reference(scheme, n):
    model = SignalModel.from_q(0.64)
    dist, reward, response = naive_enumeration(n, scheme, model)
    got = outcome_distribution(n, scheme, model).probabilities
    assert got == pytest.approx(dist, abs=1e-12)
    assert expected_total_reward_exact(n, scheme, model) == pytest.approx(reward, abs=1e-12)
    cells = social_response_matrix(n, scheme, model).cells
    assert set(cells) == set(response)
    for key, value in response.items():
        assert cells[key] == pytest.approx(value, abs=1e-12)


class TestSocialResponse:
    def test_empty_history_cell(self, model23):
        cells = social_response_matrix(9, Binary(), model23).cells
        assert cells[(0, 0)] == pytest.approx(model23.q, abs=1e-9)
        assert set(cells) == {(a, b) for a in range(9) for b in range(9) if a + b < 9}

    def test_condorcet_all_q(self, model23):
        cells = social_response_matrix(13, Condorcet(), model23).cells
        assert all(abs(v - model23.q) <= 1e-12 for v in cells.values())

    def test_minority_history_depresses_accuracy(self, model23):
        cells = social_response_matrix(9, Binary(), model23).cells
        assert cells[(0, 5)] < 2 / 3
        assert all(0.0 <= v <= 1.0 for v in cells.values())


class TestProperties:
    @pytest.mark.parametrize("scheme", SCHEMES)
    @pytest.mark.parametrize("k", [1, 6, 12])
    def test_level_masses_normalised(self, scheme, k):
        res = enumerate_sequences(12, scheme, SignalModel.from_q(0.7))
        assert math.fsum(res.mass_a[k]) == pytest.approx(1.0, abs=1e-12)
        assert math.fsum(res.mass_b[k]) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("q", [0.6, 2 / 3, 0.8])
    def test_condorcet_matches_cjt(self, q):
        model = SignalModel.from_q(q)
        for n in range(1, 20, 2):
            m = enumerate_metrics(n, Condorcet(), model)
            assert m.collective_accuracy == pytest.approx(cjt_accuracy(n, model.q), abs=1e-9)
            assert m.individual_accuracy == pytest.approx(model.q, abs=1e-9)

    def test_symmetry_of_conditioning(self, model23):
        # by A/B symmetry P(n_A = k | x=+1) equals P(n_A = n-k | x=-1)
        res = enumerate_sequences(9, Competitive(1.3), model23)
        assert res.mass_a[9] == pytest.approx(res.mass_b[9][::-1], abs=1e-14)

    def test_thread_count_and_split_invariance(self, model23):
        import cascade_lab.enumeration as en

        base = enumerate_sequences(15, Binary(), model23, threads=1)
        # bypass the result cache for a genuine repeat run
        again = en._enumerate_cached.__wrapped__(15, 1.0, model23.epsilon, 1, 6)
        assert base == again
        threaded = enumerate_sequences(15, Binary(), model23, threads=4)
        assert threaded.mass_a == base.mass_a
        other_split = enumerate_sequences(15, Binary(), model23, threads=1, split_depth=3)
        assert other_split.mass_a[15] == pytest.approx(base.mass_a[15], abs=1e-12)

    def test_binary_cascades(self, model23):
        binary = enumerate_metrics(15, Binary(), model23)
        indep = enumerate_metrics(15, Condorcet(), model23)
        assert binary.collective_accuracy < indep.collective_accuracy
        assert binary.individual_accuracy > model23.q
