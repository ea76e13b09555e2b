"""
All counterfactuals within a radius, and 2-D views of them
==========================================================

Beyond the single nearest answer, cf_set enumerates every pure region that
meets the target strictly within a distance budget, each with its own
closest point. project_regions flattens those boxes onto two chosen
dimensions for plotting.
"""

import numpy as np

from boxcf import (
    CfQuery,
    CfTarget,
    RandomModelSpec,
    cf_set,
    generate_model,
    project_regions,
)

model = generate_model(RandomModelSpec(seed=21, dims=3, num_trees=10, max_depth=3))
x = np.array([0.0, 0.0, 0.0])
v = float(model.predict(x).output[0])
print(f"regression model outputs {v:.3f} at the origin")

# Every region with output >= v + 0.4, strictly closer than sq distance 4.
target = CfTarget.score_interval(v + 0.4, np.inf)
items = cf_set(model, CfQuery(x=x, target=target, radius=4.0))
print(f"\n{len(items)} target regions within squared distance 4.0:")
for item in items[:6]:
    print(f"  sq_dist {item.sq_dist:.4f}  point {np.round(item.point, 3).tolist()}"
          f"  value {item.region.margin[0]:+.3f}")
if len(items) > 6:
    print(f"  ... and {len(items) - 6} more")

# Results come back sorted; the first is exactly the cf_query answer.
assert all(a.sq_dist <= b.sq_dist for a, b in zip(items, items[1:]))

# A prediction band around the current output ("what's nearby that stays
# within +/- 0.25 of what the model says now?") needs no explicit target.
band = cf_set(model, CfQuery(x=x, epsilon_pred=0.25, radius=4.0))
values = [float(item.region.margin[0]) for item in band]
print(f"\nprediction band v +/- 0.25: {len(band)} regions, "
      f"values in [{min(values):.3f}, {max(values):.3f}]")

# Project the target regions onto dims (0, 1) as drawable rectangles.
rects = project_regions(items, (0, 1))
print(f"\nprojection onto dims (0, 1): {len(rects)} rectangles")
for rect in rects[:5]:
    print(f"  x [{rect.x.lo:.3g}, {rect.x.hi:.3g})"
          f"  y [{rect.y.lo:.3g}, {rect.y.hi:.3g})"
          f"  value {rect.klass:+.3f}  sq_dist {rect.sq_dist:.4f}")

# One rectangle per region, each carrying its own nearest distance, so a
# plot can order or shade overlaps however it likes.
assert len(rects) == len(items)
print("projection done")
