"""Closed-form estimates against the full optimization.

The estimate ignores pulses with three or more photons and lets Eve only
store two-photon pulses. It captures the scaling mu* ~ t and S ~ t^2, but
not every number. Dark counts matter near the end of the key, and so do
the neglected multi-photon terms at short distance.
"""
from bb84pns import ApproxParams, DetectorParams, mu_star_approx, optimize_mu, s_approx

det = DetectorParams()
print("  V     d    mu* num   mu* est   S num       S est")
for V in (1.0, 0.95, 0.9):
    for d in (10, 30, 50):
        mu, p = optimize_mu(d, 0.25, det, V)
        ap = ApproxParams.at_distance(d, V, detector=det)
        print(f"  {V:.2f}  {d:2d}   {mu:.4f}    {mu_star_approx(ap):.4f}    {p.s:.3e}   {s_approx(ap):.3e}")

# A sub-Poissonian source (g2 < 1) moves both the best intensity and the rate up
for g2 in (1.0, 0.5, 0.1):
    ap = ApproxParams.at_distance(30, 0.95, detector=det, g2=g2)
    print(f"g2={g2:.1f}: mu* ~ {mu_star_approx(ap):.4f}, S ~ {s_approx(ap):.3e}")
