import math
import random

import numpy as np
import pytest

import punchline


def test_alignment_examples():
    assert punchline.align("Tiger Woods announces return to sex", "Tiger Woods announces return to golf") == (
        (5, 6),
        (5, 6),
        False,
    )
    funny, serious, _ = punchline.align("GM recalls disposable car", "GM recalls car")
    assert funny == (2, 3) and serious == (2, 2)
    with pytest.raises(ValueError):
        punchline.align("same words", "same words")


def test_jaccard_and_tokens():
    assert punchline.word_tokenize("Pope hugs puppy!") == ["pope", "hugs", "puppy", "!"]
    assert punchline.jaccard_distance("a b c", "a b d") == pytest.approx(0.5)


def test_js_divergence_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p, q = rng.dirichlet(np.ones(7)), rng.dirichlet(np.ones(7))
        m = (p + q) / 2
        want = 0.5 * np.sum(p * np.log2(p / m)) + 0.5 * np.sum(q * np.log2(q / m))
        assert punchline.js_divergence(list(p), list(q)) == pytest.approx(want, abs=1e-12)


def test_statistics():
    random.seed(1)
    x = [float(random.random() < 0.7) for _ in range(400)]
    lo, hi = punchline.bootstrap_ci(x, seed=3)
    assert lo <= sum(x) / len(x) <= hi
    r = punchline.paired_t_test([1.0, 2.0, 3.5, 4.0], [1.0, 1.5, 3.0, 3.0])
    assert r.defined and 0 < r.p_value < 1 and r.n == 4
    flat = punchline.paired_t_test([1.0, 2.0], [0.0, 1.0])
    assert not flat.defined and math.isnan(flat.p_value)
    t, acc = punchline.lm_threshold_search([-10.0, -20.0, -30.0, -40.0], [0, 0, 1, 1])
    assert acc == 1.0 and -30.0 < t <= -20.0


def test_load_corpus(tmp_path):
    path = tmp_path / "pairs.tsv"
    path.write_text(
        "pair_id\tfunny\tserious\tsplit\tquality\thumor_type\n"
        "a\tsenate approves nap\tsenate approves budget\ttest\t3\t\n"
        "b\tmayor hugs clown\tmayor hugs voter\ttrain\t1\t\n"
    )
    pairs = punchline.load_corpus(path)
    assert [p["pair_id"] for p in pairs] == ["a", "b"]
    assert pairs[0]["funny_span"] == (2, 3) and pairs[0]["hq"]
    assert pairs[1]["split"] == "train"
