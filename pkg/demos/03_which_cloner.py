"""Comparing Eve's options on two-photon pulses at the same mean photon number.

``none`` means she may only store a photon, ``A`` adds the universal
asymmetric 2->3 cloner, ``C`` keeps one photon and clones the other with
the phase-covariant 1->2 cloner. C reaches full information with the
smallest disturbance, so it is the strongest of the three.
"""
from bb84pns import D2_CLONER_C, ClonerKind, DetectorParams, compare_cloners, i2_cloner_a

det = DetectorParams()
for V in (0.95, 0.9, 0.85):
    for d in (10, 30, 50):
        pts = compare_cloners(d, 0.25, det, V)
        s = {k.value: p.s for k, p in pts.items()}
        gap = (s["none"] - s["C"]) / s["none"] if s["none"] > 0 else float("nan")
        print(f"V={V:.2f} d={d:2d} km  S_none={s['none']:.3e}  S_A={s['A']:.3e}  S_C={s['C']:.3e}"
              f"  rel. gap {gap:.1%}")

# Cloner A gets one full bit at D2 = 1/6, cloner C already at D2 ~ 0.146
print(f"\nD2 for cloner C: {D2_CLONER_C:.6f};  I2_A(1/6) = {i2_cloner_a(1 / 6):.6f}")
# but the optimizer runs cloner A slightly below 1/6: the curve is flat there
pts = compare_cloners(30, 0.25, det, 0.9)
print(f"optimal D2 for cloner A at 30 km, V=0.9: {pts[ClonerKind.A].attack.d2:.4f}")
