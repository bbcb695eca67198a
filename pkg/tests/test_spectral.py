import math

import numpy as np
import pytest
import torch

from oracles import naive_dft, naive_fourier_mae, relative_error
from timemar.vqvae.attention import CrossAttention
from timemar.vqvae.spectral import FrequencyEmbedder, amplitude_phase, fourier_loss


def rand(shape, seed=0):
    return torch.from_numpy(np.random.default_rng(seed).standard_normal(shape)).float()


class TestAmplitudePhase:
    def test_constant_signal_has_dc_only(self):
        x = torch.full((1, 24, 1), 0.8)
        amplitude, phase = amplitude_phase(x)
        assert amplitude.shape == (1, 13, 1)
        assert amplitude[0, 0, 0] == pytest.approx(24 * 0.8, rel=1e-6)
        assert amplitude[0, 1:, 0].abs().max() < 1e-5
        assert phase[0, 1:, 0].abs().max() < 1e-6  # dead bins forced to zero

    @pytest.mark.parametrize("t", [8, 24, 64])
    def test_matches_naive_dft(self, t):
        x = rand((2, t, 3), seed=t)
        amplitude, phase = amplitude_phase(x)
        for b in range(2):
            for d in range(3):
                expected = naive_dft(x[b, :, d].numpy())
                np.testing.assert_allclose(
                    amplitude[b, :, d].numpy(), np.abs(expected), rtol=1e-5, atol=1e-5
                )
                # Compare angles on the unit circle: +pi and -pi coincide.
                gap = np.abs(
                    np.exp(1j * phase[b, :, d].numpy().astype(np.float64))
                    - np.exp(1j * np.angle(expected))
                )
                assert gap.max() <= 1e-4

    def test_pure_tone_peaks_at_its_bin(self):
        t = 24
        x = torch.sin(2 * math.pi * 3 * torch.arange(t) / t).reshape(1, t, 1)
        amplitude, _ = amplitude_phase(x)
        assert int(amplitude[0, :, 0].argmax()) == 3

    @pytest.mark.parametrize("t", [8, 24, 64])
    def test_parseval(self, t):
        x = rand((1, t, 2), seed=100 + t)
        amplitude, _ = amplitude_phase(x)
        for d in range(2):
            time_energy = float((x[0, :, d] ** 2).sum())
            spectrum = amplitude[0, :, d].numpy().astype(np.float64) ** 2
            # Conjugate-symmetric accounting: inner bins count twice.
            weights = np.full(len(spectrum), 2.0)
            weights[0] = 1.0
            if t % 2 == 0:
                weights[-1] = 1.0
            freq_energy = float((spectrum * weights).sum()) / t
            assert relative_error(time_energy, freq_energy) <= 1e-5

    def test_gradient_safe_at_zero(self):
        x = torch.zeros(1, 8, 1, requires_grad=True)
        amplitude, phase = amplitude_phase(x)
        (amplitude.sum() + phase.sum()).backward()
        assert torch.isfinite(x.grad).all()


class TestFrequencyEmbedder:
    def test_output_shape(self):
        emb = FrequencyEmbedder(num_features=5, z_channels=64)
        out = emb(rand((3, 24, 5), seed=1))
        assert out.shape == (3, 13, 64)

    def test_finite_on_random_input(self):
        emb = FrequencyEmbedder(num_features=2, z_channels=16)
        out = emb(rand((2, 24, 2), seed=2))
        assert torch.isfinite(out).all()


class TestFourierLoss:
    def test_identical_inputs_give_zero(self):
        x = rand((2, 24, 3), seed=3)
        assert float(fourier_loss(x, x)) <= 1e-9

    @pytest.mark.parametrize("t", [8, 24, 64])
    def test_matches_naive_oracle(self, t):
        x = rand((2, t, 2), seed=t + 1)
        y = rand((2, t, 2), seed=t + 2)
        got = float(fourier_loss(x, y))
        expected = naive_fourier_mae(x.numpy(), y.numpy())
        assert relative_error(got, expected) <= 1e-6

    def test_degree_one_homogeneity(self):
        x = rand((1, 24, 2), seed=7)
        y = rand((1, 24, 2), seed=8)
        base = float(fourier_loss(x, y))
        scaled = float(fourier_loss(2.5 * x, 2.5 * y))
        assert relative_error(scaled, 2.5 * base) <= 1e-5

    def test_shape_mismatch(self):
        from timemar.errors import ConfigError

        with pytest.raises(ConfigError):
            fourier_loss(rand((1, 24, 2)), rand((1, 24, 3)))


class TestCrossAttention:
    def test_single_key_returns_its_value(self):
        torch.manual_seed(0)
        attn = CrossAttention(8)
        queries = rand((2, 5, 8), seed=9)
        kv = rand((2, 1, 8), seed=10)
        out = attn(queries, kv)
        expected = attn.proj_v(kv).expand(-1, 5, -1)
        torch.testing.assert_close(out, expected)

    def test_identical_keys_average_to_single_value(self):
        torch.manual_seed(1)
        attn = CrossAttention(8)
        queries = rand((1, 4, 8), seed=11)
        single = rand((1, 1, 8), seed=12)
        kv = single.expand(-1, 6, -1)
        out = attn(queries, kv)
        expected = attn.proj_v(single).expand(-1, 4, -1)
        assert (out - expected).abs().max() <= 1e-6

    def test_rows_sum_to_one(self):
        torch.manual_seed(2)
        attn = CrossAttention(16)
        weights = attn.attention_weights(rand((2, 6, 16), seed=13), rand((2, 9, 16), seed=14))
        assert (weights.sum(-1) - 1.0).abs().max() <= 1e-6

    def test_empty_keys_rejected(self):
        from timemar.errors import ConfigError

        attn = CrossAttention(4)
        with pytest.raises(ConfigError):
            attn(rand((1, 3, 4)), torch.zeros(1, 0, 4))
