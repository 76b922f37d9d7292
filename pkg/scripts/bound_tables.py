"""Print how the excess-length bounds shrink with the calibration and learning sizes."""
from qae_conformal import bounds as B

H = B.HolderParams(L=1.0, gamma=1.0, r=1.0)
F = B.Complexity(finite_class=100)

print(f"{'n':>8}  {'dkw':>8}  {'level':>8}  {'fixed-f':>8}  {'trained':>8}  {'nested':>8}")
for n in (500, 1000, 2000, 5000, 10_000, 100_000):
    ev = B.effort_excess_volume_bound(n, n, 0.1, 0.05, H, F)
    print(
        f"{n:>8}  {B.dkw_epsilon(n, 0.05):8.4f}  {B.conservative_oracle_level(n, 0.1, 0.05).level:8.4f}  "
        f"{ev.calibration:8.4f}  {ev.total:8.4f}  {B.nested_length_bound(2, 0, n, 0.1, 0.05, H):8.4f}"
    )
