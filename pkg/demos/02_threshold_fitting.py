"""Fitting the decision threshold.

The threshold tau is the (1 - alpha) quantile of a Gaussian-kernel density
estimate over calibrated signals from known-belonging images. alpha is the
belonging false-negative rate you are willing to pay.
"""

import numpy as np

import aedr

train = aedr.gaussian_field_corpus(
    120, 24, 24, correlation=2.5, amplitude=0.1, seed=1, id_prefix="train"
)
backend = aedr.train_linear_backend([e.image for e in train], latent_dim=12, seed=1)

calibration = aedr.synthesize_corpus(backend, 300, seed=10, id_prefix="cal")
records = aedr.score_corpus(backend, calibration)
signals = [r.calibrated for r in records]
print(f"calibration signals: n={len(signals)}, "
      f"median={np.median(signals):.3f}, q95={np.percentile(signals, 95):.3f}")

model = aedr.fit_kde(signals, backend_id=backend.id)
print(f"Silverman bandwidth: {model.bandwidth:.5f}")

print("\nalpha    tau      cdf(tau)")
for alpha in (0.01, 0.05, 0.10, 0.25):
    solved = aedr.solve_threshold(model, alpha)
    print(f"{alpha:<8} {solved.tau:<8.4f} {aedr.kde_cdf(model, solved.tau):.4f}")

solved = aedr.solve_threshold(model, 0.05)
for signal in (0.4, solved.tau * 0.99, solved.tau, 3.0):
    verdict = aedr.decide(signal, solved.tau)
    print(f"signal {signal:.4f} vs tau {solved.tau:.4f} -> {verdict.value}")
