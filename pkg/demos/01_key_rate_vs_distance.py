"""Key rate against distance for a few visibilities.

Alice picks the mean photon number that maximizes the key rate at every
distance, knowing that Eve will attack as well as she can.
"""
import numpy as np

from bb84pns import ClonerKind, DetectorParams, scan_distance, t_limit

det = DetectorParams(eta=0.1, p_d=1e-5)

# Perfect visibility: Eve can only store photons from multi-photon pulses,
# which gives her no errors to hide. Loss and dark counts still end the key.
for V in (1.0, 0.95, 0.9):
    res = scan_distance((10, 100), 10, 0.25, det, V, ClonerKind.C)
    print(f"V = {V}")
    print("  d [km]   mu*       S [bit/pulse]")
    for p in res.points:
        flag = "  (insecure)" if p.insecure else ""
        print(f"  {p.d:6.1f}   {p.mu:.4f}   {p.key_rate:.3e}{flag}")

# At V = 1 the distance where S hits zero has a closed form
t_lim, d_lim = t_limit(det)
print(f"\nexpected end of the key at V = 1: t = {t_lim:.6f}, d = {d_lim:.1f} km")

# Without dark counts the rate would fall like t^2 (one t from loss, one
# from mu* ~ t); dark counts make the drop steeper towards the end
res = scan_distance((20, 60), 20, 0.25, det, 1.0)
s = res.column("s")
print("ratio S(d) / S(d + 20 km):", np.round(s[:-1] / s[1:], 2), "vs t^-2 =", round(10 ** (2 * 0.5), 2))
