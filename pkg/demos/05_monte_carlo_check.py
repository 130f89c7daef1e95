"""Sampling pulses one by one to check Bob's count rates.

Each pulse draws a photon number, loses photons on the line and in the
detector, and either clicks correctly, clicks wrongly or fires a dark count.
The empirical rates should sit within a few standard errors of the formulas.
"""
from bb84pns import ChannelParams, DetectorParams, SimConfig, SourceModel, link_rates, simulate_link

src = SourceModel.poissonian(0.1)
ch = ChannelParams(alpha=0.25, d=40.0, V=0.9)
det = DetectorParams(eta=0.1, p_d=1e-5)

sim = simulate_link(SimConfig(n_pulses=10_000_000, seed=7, source=src, channel=ch, detector=det))
link = link_rates(src, ch, det)

for name, hat, err, exact in (("C_right", sim.c_right_hat, sim.c_right_err, link.c_right),
                              ("C_wrong", sim.c_wrong_hat, sim.c_wrong_err, link.c_wrong),
                              ("Q", sim.q_hat, sim.q_err, link.q)):
    print(f"{name:8s} sampled {hat:.4e} +- {err:.1e}   formula {exact:.4e}   ({(hat - exact) / err:+.2f} sigma)")
