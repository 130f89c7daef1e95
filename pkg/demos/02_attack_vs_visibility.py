"""How Eve's optimal attack changes as the visibility drops, at 30 km.

Near V = 1 she spends the whole error budget on 2->3 cloning of two-photon
pulses. Once every pair is cloned she starts cloning single photons too.
"""
from bb84pns import DetectorParams, scan_visibility

det = DetectorParams()
res = scan_visibility(30, (0.72, 1.0), 0.02, 0.25, det)

print("   V     mu*     p_c1    D1      p_s2    p_c2    S")
for p in res.points:
    a = p.attack
    print(f"  {p.V:.2f}  {p.mu:.4f}  {a.p_c1:.4f}  {a.d1:.4f}  {a.p_s2:.4f}  {a.p_c2:.4f}  {p.key_rate:.2e}")

# Who supplies Eve's information? Each share is divided by I(A:B); when the
# sum reaches 1 Alice and Bob have no key left.
print("\n   V    R1*I1   R2s     R2c*I2  R3      sum")
for p in res.points[::2]:
    terms = p.information_terms()
    print(f"  {p.V:.2f}  " + "  ".join(f"{x:.3f}" for x in terms) + f"   {sum(terms):.3f}")
