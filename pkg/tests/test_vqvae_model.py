import numpy as np
import pytest
import torch

from gradtools import fd_check
from timemar.errors import ConfigError
from timemar.vqvae import DualPathVqvae, TokenSequence, VqvaeConfig


def small_config(**overrides):
    defaults = dict(
        vocab_size=24,
        z_channels=8,
        ch=8,
        ch_mult=(1, 2),
        enc_dec_layers=1,
        patch_nums=(1, 2, 3, 4, 6, 8, 10, 12),
    )
    defaults.update(overrides)
    return VqvaeConfig(**defaults)


def make_model(seed=0, t=24, d=3, **overrides):
    torch.manual_seed(seed)
    return DualPathVqvae(small_config(**overrides), t, d)


def rand(shape, seed=0, dtype=torch.float32):
    return torch.from_numpy(np.random.default_rng(seed).standard_normal(shape)).to(dtype)


# Table-3 style geometry grid: (T, ch_mult, patch_nums, vocab)
CONFIG_GRID = [
    (24, (1, 1, 2), (1, 2, 3, 4, 5, 6), 48),
    (24, (1, 1, 2), (1, 2, 3, 6), 32),
    (24, (2, 2, 2), (1, 2, 3, 4, 5, 6), 48),
    (24, (1, 2), (1, 2, 3, 4, 6, 8, 10, 12), 64),
]


class TestGeometry:
    def test_base_length_three_stages(self):
        model = make_model(ch_mult=(1, 1, 2), patch_nums=(1, 2, 3, 4, 5, 6))
        assert model.base_length == 6
        out = model.encode_coarse(rand((2, 24, 3), seed=1))
        assert out.shape == (2, 6, 8)

    def test_base_length_two_stages(self):
        model = make_model(ch_mult=(1, 2), patch_nums=(1, 2, 3, 4, 6, 8, 10, 12))
        assert model.base_length == 12
        out = model.encode_coarse(rand((2, 24, 3), seed=2))
        assert out.shape == (2, 12, 8)

    def test_zero_input_smoke(self):
        model = make_model()
        out = model.encode_coarse(torch.zeros(1, 24, 3))
        assert torch.isfinite(out).all()

    def test_geometry_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="patch_nums"):
            make_model(ch_mult=(1, 1, 2), patch_nums=(1, 2, 3, 4, 6, 8, 10, 12))

    def test_shape_mismatch_rejected(self):
        model = make_model()
        with pytest.raises(ConfigError, match="expected input"):
            model.encode_coarse(rand((2, 12, 3)))

    def test_encode_fine_shapes_across_grid(self):
        for t, ch_mult, patch_nums, vocab in CONFIG_GRID:
            model = make_model(ch_mult=ch_mult, patch_nums=patch_nums, vocab_size=vocab, t=t)
            out = model.encode_fine(rand((2, t, 3), seed=3))
            assert out.shape == (2, max(patch_nums), 8)
            assert torch.isfinite(out).all()

    def test_decode_output_length(self):
        for t, ch_mult, patch_nums, vocab in CONFIG_GRID:
            model = make_model(ch_mult=ch_mult, patch_nums=patch_nums, vocab_size=vocab, t=t)
            base = max(patch_nums)
            z = rand((2, base, 8), seed=4)
            trend, coarse, seasonal, total = model.decode(z, z, z)
            assert total.shape == (2, t, 3)
            assert base * 2 ** (len(ch_mult) - 1) == t


class TestForward:
    def test_full_pass_contracts(self):
        model = make_model(seed=1)
        x = torch.rand(4, 24, 3)
        out = model(x)
        assert out.x_hat.shape == x.shape
        # Additive output, exactly by construction.
        assert (out.x_hat - (out.trend_hat + out.seasonal_hat)).abs().max() <= 1e-6
        # Decomposition additivity.
        assert (x - (out.trend + out.seasonal)).abs().max() <= 1e-6
        assert out.quant.tokens.flat.shape == (4, sum(model.config.patch_nums))

    def test_telescoping_across_grid(self):
        for t, ch_mult, patch_nums, vocab in CONFIG_GRID:
            model = make_model(ch_mult=ch_mult, patch_nums=patch_nums, vocab_size=vocab, t=t)
            with torch.no_grad():
                for conv in model.quantizer.phi:
                    conv.weight.add_(0.05 * torch.randn_like(conv.weight))
            x = torch.rand(3, t, 3)
            out = model(x)
            gap = (out.z_fused - out.quant.final_residual - out.quant.z_hat).abs().max()
            assert float(gap) <= 1e-5

    def test_shared_coarse_parameters(self):
        model = make_model()
        # Trend and coarse-seasonal paths run through literally the same modules.
        assert model.enc_coarse is model.enc_coarse
        x = torch.rand(2, 24, 3)
        out = model(x)
        with torch.no_grad():
            z_t = model.enc_coarse(out.trend)
            z_c = model.enc_coarse(out.coarse)
        torch.testing.assert_close(out.z_trend, z_t)
        torch.testing.assert_close(out.z_coarse, z_c)

    def test_decode_tokens_matches_forward_values(self):
        model = make_model(seed=2)
        x = torch.rand(2, 24, 3)
        out = model(x)
        trend, coarse, seasonal, total = model.decode_tokens(out.quant.tokens)
        torch.testing.assert_close(total, out.x_hat)
        torch.testing.assert_close(seasonal, out.seasonal_hat)

    def test_fuse_and_split_shapes(self):
        model = make_model()
        z = rand((2, 12, 8), seed=5)
        fused = model.fuse_latents(z, z, z)
        assert fused.shape == z.shape
        a, b, c = model.split_latent(fused)
        assert a.shape == b.shape == c.shape == z.shape

    def test_determinism(self):
        model = make_model(seed=3)
        model.eval()
        x = torch.rand(2, 24, 3)
        first = model(x)
        second = model(x)
        assert torch.equal(first.x_hat, second.x_hat)
        assert torch.equal(first.quant.tokens.flat, second.quant.tokens.flat)


class TestLoss:
    def test_all_lambdas_zero_gives_zero_total(self):
        lambdas = {k: 0.0 for k in ("rec", "vq", "trend", "season", "coarse", "fourier")}
        model = make_model(lambdas=lambdas)
        x = torch.rand(2, 24, 3)
        out = model(x)
        breakdown = model.loss(x, out)
        assert float(breakdown.total) == 0.0

    def test_total_is_weighted_sum(self):
        model = make_model(seed=4)
        x = torch.rand(3, 24, 3)
        out = model(x)
        breakdown = model.loss(x, out)
        lambdas = model.config.resolved_lambdas()
        expected = (
            lambdas["rec"] * float(breakdown.rec)
            + lambdas["vq"] * float(breakdown.vq)
            + lambdas["trend"] * float(breakdown.rec_trend)
            + lambdas["season"] * float(breakdown.rec_season)
            + lambdas["coarse"] * float(breakdown.rec_coarse)
            + lambdas["fourier"] * float(breakdown.fourier)
        )
        assert abs(float(breakdown.total) - expected) <= 1e-6

    def test_terms_non_negative(self):
        model = make_model(seed=5)
        x = torch.rand(2, 24, 3)
        breakdown = model.loss(x, model(x))
        for name, value in breakdown.terms().items():
            assert float(value) >= 0.0, name

    def test_perfect_fixture_gives_zero_terms(self):
        # Zero input decomposes to zero components; force outputs to match.
        model = make_model()
        x = torch.rand(2, 24, 3)
        out = model(x)
        from timemar.vqvae.model import ForwardOutput
        from timemar.vqvae.quantize import QuantizeResult

        zeros = torch.zeros_like(x)
        quant = QuantizeResult(
            tokens=out.quant.tokens,
            z_hat=out.z_fused.detach(),
            final_residual=torch.zeros_like(out.z_fused),
            per_scale_features=[f.detach() for f in out.quant.per_scale_features],
            per_scale_codes=[f.detach() for f in out.quant.per_scale_features],
        )
        perfect = ForwardOutput(
            trend=out.trend, seasonal=out.seasonal, coarse=out.coarse,
            z_trend=out.z_trend, z_coarse=out.z_coarse, z_seasonal=out.z_seasonal,
            z_fused=out.z_fused, quant=quant,
            trend_hat=out.trend, coarse_hat=out.coarse, seasonal_hat=out.seasonal,
            x_hat=out.trend + out.seasonal,
        )
        breakdown = model.loss(x, perfect)
        assert float(breakdown.rec) <= 1e-10
        assert float(breakdown.vq) <= 1e-10
        assert float(breakdown.rec_trend) <= 1e-10
        assert float(breakdown.fourier) <= 1e-6


class TestGradients:
    """Central finite differences at float64 on each differentiable submodule."""

    def _x(self, model, seed=0):
        return torch.rand(
            2, model.window_length, model.num_features,
            generator=torch.Generator().manual_seed(seed),
            dtype=torch.float64,
        )

    def test_encoder_coarse(self):
        model = make_model(seed=6).double()
        x = self._x(model)
        weights = torch.randn(2, 12, 8, dtype=torch.float64)
        fd_check(
            lambda: (model.enc_coarse(x) * weights).sum(),
            list(model.enc_coarse.parameters()),
            probes=20, seed=1,
        )

    def test_encoder_fine_with_frequency_branch(self):
        model = make_model(seed=7).double()
        x = self._x(model, seed=1)
        weights = torch.randn(2, 12, 8, dtype=torch.float64)
        params = (
            list(model.enc_fine_time.parameters())
            + list(model.freq_embedder.parameters())
            + list(model.enc_attn.parameters())
        )
        fd_check(
            lambda: (model.encode_fine(x) * weights).sum(),
            params, probes=24, seed=2,
        )

    def test_fuse(self):
        model = make_model(seed=8).double()
        z = torch.randn(2, 12, 8, dtype=torch.float64)
        weights = torch.randn(2, 12, 8, dtype=torch.float64)
        fd_check(
            lambda: (model.fuse_latents(z, 0.5 * z, -z) * weights).sum(),
            list(model.fuse.parameters()), probes=20, seed=3,
        )

    def test_fuse_gradient_wrt_inputs(self):
        model = make_model(seed=9).double()
        inputs = [
            torch.randn(1, 12, 8, dtype=torch.float64, requires_grad=True)
            for _ in range(3)
        ]
        weights = torch.randn(1, 12, 8, dtype=torch.float64)
        fd_check(
            lambda: (model.fuse_latents(*inputs) * weights).sum(),
            inputs, probes=15, seed=4,
        )

    def test_split(self):
        model = make_model(seed=10).double()
        z = torch.randn(2, 12, 8, dtype=torch.float64)
        def scalar():
            a, b, c = model.split_latent(z)
            return (a * 1.3).sum() + (b * 0.7).sum() - c.sum()
        fd_check(scalar, list(model.split.parameters()), probes=20, seed=5)

    def test_decoders_and_guidance(self):
        model = make_model(seed=11).double()
        z = torch.randn(2, 12, 8, dtype=torch.float64)
        weights = torch.randn(2, 24, 3, dtype=torch.float64)
        params = (
            list(model.dec_coarse.parameters())
            + list(model.dec_fine.parameters())
            + list(model.guidance_embedder.parameters())
            + list(model.dec_attn.parameters())
        )
        def scalar():
            trend, coarse, seasonal, total = model.decode(z, 0.5 * z, -0.5 * z)
            return (total * weights).sum() + (coarse * weights).sum()
        fd_check(scalar, params, probes=24, seed=6)

    def test_attention_isolated(self):
        from timemar.vqvae.attention import CrossAttention

        torch.manual_seed(12)
        attn = CrossAttention(8).double()
        q = torch.randn(2, 5, 8, dtype=torch.float64)
        kv = torch.randn(2, 9, 8, dtype=torch.float64)
        weights = torch.randn(2, 5, 8, dtype=torch.float64)
        fd_check(
            lambda: (attn(q, kv) * weights).sum(),
            list(attn.parameters()), probes=20, seed=7,
        )

    def test_composite_loss_wrt_codebook_and_decoder_path(self):
        # Teacher-forced surrogate: indices and stop-gradient snapshots frozen,
        # which is exactly what makes FD match the stop-gradient analytic form.
        model = make_model(seed=13).double()
        x = self._x(model, seed=2)
        base = model(x)
        frozen_tokens = base.quant.tokens
        frozen_features = [f.detach().clone() for f in base.quant.per_scale_features]
        frozen_codes = [e.detach().clone() for e in base.quant.per_scale_codes]

        def scalar():
            out = model(x, tokens=frozen_tokens)
            lambdas = model.config.resolved_lambdas()
            mse = torch.nn.functional.mse_loss
            codebook_term = torch.zeros((), dtype=torch.float64)
            commit_term = torch.zeros((), dtype=torch.float64)
            for f_k, e_k, f_frozen, e_frozen in zip(
                out.quant.per_scale_features, out.quant.per_scale_codes,
                frozen_features, frozen_codes,
            ):
                codebook_term = codebook_term + (f_frozen - e_k).pow(2).mean()
                commit_term = commit_term + (f_k - e_frozen).pow(2).mean()
            scales = len(frozen_features)
            vq = codebook_term / scales + model.config.beta * commit_term / scales
            return (
                lambdas["rec"] * mse(out.x_hat, x)
                + lambdas["vq"] * vq
                + lambdas["trend"] * mse(out.trend_hat, out.trend)
                + lambdas["season"] * mse(out.seasonal_hat, out.seasonal)
                + lambdas["coarse"] * mse(out.coarse_hat, out.coarse)
                + lambdas["fourier"]
                * torch.sqrt(
                    (torch.fft.rfft(out.seasonal, dim=1) - torch.fft.rfft(out.seasonal_hat, dim=1)).abs().pow(2)
                    + 1e-24
                ).mean()
            )

        params = (
            [model.quantizer.codebook]
            + list(model.quantizer.phi.parameters())
            + list(model.split.parameters())
            + list(model.dec_coarse.parameters())
        )
        fd_check(scalar, params, probes=24, seed=8, step=1e-6)

    def test_stop_gradient_semantics(self):
        # Plain-VQ configuration: the codebook term must push only the
        # codebook, the commitment term only the encoder path.
        model = make_model(seed=14, patch_nums=(12,), vocab_size=16).double()
        x = self._x(model, seed=3)
        out = model(x)
        codebook_term, commit_term = model.vq_loss_terms(out.quant)

        encoder_params = [p for p in model.enc_coarse.parameters()] + [
            p for p in model.fuse.parameters()
        ]
        grads = torch.autograd.grad(
            codebook_term, encoder_params, retain_graph=True, allow_unused=True
        )
        assert all(g is None or g.abs().max() == 0 for g in grads)

        grad_codebook = torch.autograd.grad(
            commit_term, model.quantizer.codebook, retain_graph=True, allow_unused=True
        )[0]
        assert grad_codebook is None or grad_codebook.abs().max() == 0

        grad_codebook = torch.autograd.grad(
            codebook_term, model.quantizer.codebook, retain_graph=True
        )[0]
        assert grad_codebook.abs().max() > 0

        grads_enc = torch.autograd.grad(
            commit_term, encoder_params, retain_graph=True, allow_unused=True
        )
        assert any(g is not None and g.abs().max() > 0 for g in grads_enc)

    def test_codebook_reaches_reconstruction_through_decoder_path(self):
        model = make_model(seed=15).double()
        x = self._x(model, seed=4)
        out = model(x)
        rec = torch.nn.functional.mse_loss(out.x_hat, x)
        grad = torch.autograd.grad(rec, model.quantizer.codebook, retain_graph=True)[0]
        assert grad.abs().max() > 0
