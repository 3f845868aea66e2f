import numpy as np
import pytest

from themis_extract.tokenizer import (
    EOS_TOKEN,
    N_SPECIAL_TOKENS,
    PAD_TOKEN,
    TokenizerConfig,
    mean_scale,
    tokenize_window,
)


class TestMeanScale:
    def test_mean_absolute_value(self):
        assert mean_scale(np.array([1.0, -3.0, 2.0])) == 2.0

    def test_all_zero_falls_back_to_one(self):
        assert mean_scale(np.zeros(10)) == 1.0


class TestTokenizeWindow:
    def test_tokens_avoid_special_ids(self):
        rng = np.random.default_rng(0)
        tokens = tokenize_window(rng.normal(size=512))
        assert tokens.min() >= N_SPECIAL_TOKENS
        assert tokens.max() < TokenizerConfig().vocab_size
        assert PAD_TOKEN not in tokens and EOS_TOKEN not in tokens

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        np.testing.assert_array_equal(tokenize_window(x),
                                      tokenize_window(1000.0 * x))

    def test_monotone_in_value(self):
        tokens = tokenize_window(np.linspace(-5.0, 5.0, 50))
        assert np.all(np.diff(tokens.astype(np.int64)) >= 0)

    def test_extremes_clip_to_edge_bins(self):
        # outliers far beyond clip * mean|x| land in the two edge bins
        cfg = TokenizerConfig()
        x = np.concatenate([np.ones(100), [1e9, -1e9]])
        tokens = tokenize_window(x, cfg)
        assert tokens[-2] == cfg.vocab_size - 1
        assert tokens[-1] == N_SPECIAL_TOKENS

    def test_constant_window_tokenizes_uniformly(self):
        tokens = tokenize_window(np.full(64, 7.0))
        assert np.unique(tokens).size == 1

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            tokenize_window(np.array([1.0, np.nan]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            tokenize_window(np.array([]))
