import numpy as np

from srk.corpus import generate_corpus, random_rights, sample_feasible_portfolio
from srk.scenario import scenario_to_dict
from srk.sft import sft_check


def test_corpus_is_reproducible_and_in_range():
    a = generate_corpus(99, 30)
    b = generate_corpus(99, 30)
    assert [scenario_to_dict(s) for s in a] == [scenario_to_dict(s) for s in b]
    assert all(2 <= s.n <= 5 and 1 <= s.N <= 6 for s in a)
    assert len({s.name for s in a}) == 30
    assert any(s.b.any() for s in a) and any(s.N > 1 for s in a)


def test_random_rights_respect_derating():
    for s in generate_corpus(4, 20):
        rng = np.random.default_rng(0)
        for tx in (True, False):
            p = random_rights(rng, s, tx)
            assert p.transmission_only or not tx
            assert np.all(p.f <= s.c[:, None] + 1e-12)
            assert np.all(p.e <= s.b[:, None] + 1e-12)


def test_sampled_portfolios_pass():
    for q, s in enumerate(generate_corpus(8, 10)):
        p = sample_feasible_portfolio(np.random.default_rng(q), s, False)
        assert sft_check(p, s.polytope, s.storage).feasible
