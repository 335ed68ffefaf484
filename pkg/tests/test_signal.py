import numpy as np
import pytest

from aedr import (
    AedrError,
    CountingBackend,
    Decision,
    EPSILON,
    GlcmConfig,
    IdentityBackend,
    Image,
    LossMetric,
    baseline_signal,
    chain_reconstruct,
    classify,
    double_reconstruct,
    image_homogeneity,
    loss,
    loss_ratio,
    records_to_csv,
    train_linear_backend,
)
from aedr.signal import RECORD_CSV_HEADER, ReconstructionRecord

from conftest import out_of_span_vector, random_image


class TestLossRatio:
    def test_published_belonging_losses(self):
        ratio, degenerate = loss_ratio(0.00030581, 0.00021323)
        assert ratio == pytest.approx(1.4342, abs=1e-3)
        assert not degenerate

    def test_published_non_belonging_losses(self):
        ratio, degenerate = loss_ratio(0.00164355, 0.00046879)
        assert ratio == pytest.approx(3.5060, abs=1e-3)
        assert not degenerate

    def test_zero_second_loss_flags_degenerate(self):
        ratio, degenerate = loss_ratio(0.0, 0.0)
        assert ratio == 0.0
        assert degenerate

    def test_negative_loss_rejected(self):
        with pytest.raises(AedrError):
            loss_ratio(-1.0, 1.0)


class TestDoubleReconstruct:
    def test_identity_backend_is_degenerate(self):
        record = double_reconstruct(IdentityBackend(), random_image(np.random.default_rng(0), 24, 24))
        assert record.l1 == 0.0
        assert record.ratio == 0.0
        assert record.degenerate

    def test_constant_image_has_unit_homogeneity(self):
        img = Image(np.full((8, 8, 1), 0.5))
        backend = train_linear_backend([img, img], latent_dim=1, noise_sigma=0.0)
        record = double_reconstruct(backend, img)
        assert record.homogeneity == 1.0
        assert record.calibrated == record.ratio

    def test_exactly_two_backend_calls(self, smooth_backend):
        counter = CountingBackend(smooth_backend)
        double_reconstruct(counter, random_image(np.random.default_rng(1), 24, 24))
        assert counter.calls == 2

    def test_record_fields_consistent(self, smooth_backend):
        record = double_reconstruct(
            smooth_backend, random_image(np.random.default_rng(2), 24, 24),
            call_seed=77, image_id="img-7",
        )
        assert record.image_id == "img-7"
        assert record.metric == "mse"
        assert not record.degenerate
        assert record.ratio == record.l1 / record.l2
        assert record.calibrated == record.ratio * record.homogeneity
        assert 0.0 < record.homogeneity <= 1.0

    def test_second_pass_uses_next_seed(self, smooth_backend):
        x = random_image(np.random.default_rng(3), 24, 24)
        record = double_reconstruct(smooth_backend, x, call_seed=40)
        first = smooth_backend.reconstruct(x, call_seed=40)
        second = smooth_backend.reconstruct(first, call_seed=41)
        assert record.l1 == loss(LossMetric.MSE, first, x)
        assert record.l2 == loss(LossMetric.MSE, second, first)

    def test_calibrated_never_exceeds_ratio(self, smooth_backend):
        rng = np.random.default_rng(4)
        for i in range(10):
            record = double_reconstruct(smooth_backend, random_image(rng, 24, 24), call_seed=i)
            assert record.calibrated <= record.ratio

    def test_ratio_invariant_to_loss_rescaling(self, smooth_backend):
        x = random_image(np.random.default_rng(5), 24, 24)

        def scaled_mse(a, b):
            return 7.5 * loss(LossMetric.MSE, a, b)

        base = double_reconstruct(smooth_backend, x, metric=LossMetric.MSE, call_seed=9)
        scaled = double_reconstruct(smooth_backend, x, metric=scaled_mse, call_seed=9)
        assert scaled.ratio == pytest.approx(base.ratio, rel=1e-12)
        assert scaled.calibrated == pytest.approx(base.calibrated, rel=1e-12)

    def test_degenerate_iff_l2_below_epsilon(self, frozen_backend):
        record = double_reconstruct(frozen_backend, random_image(np.random.default_rng(6), 24, 24))
        assert record.l2 < EPSILON
        assert record.degenerate


class TestBaselineSignal:
    def test_identity_backend_is_zero(self):
        assert baseline_signal(IdentityBackend(), random_image(np.random.default_rng(7))) == 0.0

    def test_belonging_images_sit_near_noise_floor(self, smooth_backend):
        rng = np.random.default_rng(8)
        sigma, k, d = smooth_backend.noise_sigma, smooth_backend.latent_dim, 24 * 24
        floor = sigma**2 * k / d
        values = []
        for i in range(200):
            z = smooth_backend.latent_scales * rng.standard_normal(k)
            values.append(baseline_signal(smooth_backend, smooth_backend.decode(z), call_seed=i))
        assert np.mean(values) == pytest.approx(floor, rel=0.25)

    def test_out_of_span_energy_lower_bounds_loss(self, frozen_backend):
        rng = np.random.default_rng(9)
        v = out_of_span_vector(frozen_backend, seed=9)
        scale = 0.05
        z = 0.3 * frozen_backend.latent_scales * rng.standard_normal(frozen_backend.latent_dim)
        base = frozen_backend.decode(z).pixels
        x = Image((base + scale * v).reshape(24, 24, 1))
        residual_energy = scale**2 / x.pixels.size
        assert baseline_signal(frozen_backend, x) >= residual_energy * (1 - 1e-9)


class TestChainReconstruct:
    def test_two_steps_reproduce_double(self, smooth_backend):
        x = random_image(np.random.default_rng(10), 24, 24)
        record = double_reconstruct(smooth_backend, x, call_seed=21)
        chain = chain_reconstruct(smooth_backend, x, steps=2, call_seed=21)
        assert chain.single_losses == (record.l1, record.l2)

    def test_identity_chain_is_all_zero(self):
        chain = chain_reconstruct(IdentityBackend(), random_image(np.random.default_rng(11)), steps=4)
        assert chain.single_losses == (0.0,) * 4
        assert chain.cumulative_losses == (0.0,) * 4

    def test_cumulative_is_running_sum(self, smooth_backend):
        x = random_image(np.random.default_rng(12), 24, 24)
        chain = chain_reconstruct(smooth_backend, x, steps=5, call_seed=3)
        partial = 0.0
        for single, cumulative in zip(chain.single_losses, chain.cumulative_losses):
            partial += single
            assert cumulative == pytest.approx(partial, abs=1e-12)

    def test_non_belonging_losses_stabilize(self, smooth_backend):
        rng = np.random.default_rng(13)
        v = out_of_span_vector(smooth_backend, seed=13)
        sigma, k = smooth_backend.noise_sigma, smooth_backend.latent_dim
        scale = np.sqrt(20.0 * sigma**2 * k)
        per_step = np.zeros(5)
        n = 50
        for i in range(n):
            z = 0.3 * smooth_backend.latent_scales * rng.standard_normal(k)
            x = Image((smooth_backend.decode(z).pixels + scale * v).reshape(24, 24, 1).clip(0, 1))
            chain = chain_reconstruct(smooth_backend, x, steps=5, call_seed=10 * i)
            per_step += np.array(chain.single_losses) / n
        assert per_step[0] > per_step[1]
        tail = per_step[1:]
        assert np.all(np.abs(tail - tail.mean()) <= 0.2 * tail.mean())

    def test_zero_steps_rejected(self, smooth_backend):
        with pytest.raises(AedrError, match="steps"):
            chain_reconstruct(smooth_backend, random_image(np.random.default_rng(14), 24, 24), steps=0)


class TestClassifyPolicy:
    def make_record(self, l1, l2, ratio, degenerate):
        return ReconstructionRecord(
            image_id="r", l1=l1, l2=l2, ratio=ratio, homogeneity=1.0,
            calibrated=ratio, degenerate=degenerate, metric="mse",
        )

    def test_degenerate_zero_loss_is_belonging(self):
        record = self.make_record(0.0, 0.0, 0.0, True)
        assert classify(record, tau=1.0) is Decision.BELONGING

    def test_degenerate_with_positive_first_loss_is_non_belonging(self):
        record = self.make_record(0.01, 0.0, 1e10, True)
        assert classify(record, tau=1e20) is Decision.NON_BELONGING

    def test_regular_records_use_threshold(self):
        record = self.make_record(2.0, 1.0, 2.0, False)
        assert classify(record, tau=3.0) is Decision.BELONGING
        assert classify(record, tau=2.0) is Decision.NON_BELONGING


class TestHomogeneityOfImages:
    def test_constant_image(self):
        assert image_homogeneity(Image(np.full((6, 6, 1), 0.7))) == 1.0

    def test_busy_texture_scores_lower_than_smooth(self):
        rng = np.random.default_rng(15)
        busy = Image(rng.random((16, 16, 1)))
        smooth = Image(np.full((16, 16, 1), 0.4) + 0.01 * rng.random((16, 16, 1)))
        assert image_homogeneity(busy) < image_homogeneity(smooth)

    def test_respects_config_levels(self):
        img = Image(np.linspace(0, 1, 64).reshape(8, 8, 1))
        h_coarse = image_homogeneity(img, GlcmConfig(levels=4))
        h_fine = image_homogeneity(img, GlcmConfig(levels=64))
        assert h_coarse != h_fine


class TestRecordsCsv:
    def test_header_and_rows(self, smooth_backend):
        records = [
            double_reconstruct(smooth_backend, random_image(np.random.default_rng(16), 24, 24),
                               call_seed=i, image_id=f"img-{i}")
            for i in range(2)
        ]
        text = records_to_csv(records)
        lines = text.strip().split("\n")
        assert lines[0] == RECORD_CSV_HEADER
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "img-0"
        assert float(first[1]) == records[0].l1
        assert first[6] == "false"
