"""
Two experts who disagree
========================

Dempster's rule and the impartial rule on the textbook conflict case.
"""

# %%
import numpy as np

from evident_fuse import DirichletOpinion
from evident_fuse.experiments import format_conflict_table, run_conflict_demo
from evident_fuse.fusion import ds_combine_pair, ider_combine_all, ider_combine_pair

# %% [markdown]
# Expert 1 is 99% sure of class 0 and expert 2 is 99% sure of class 1.  Both
# keep 1% on class 2.  Neither leaves any uncertainty mass.

# %%
report = run_conflict_demo()
print(format_conflict_table(report))

# %% [markdown]
# Dempster's rule throws away the conflicting 0.9999 of mass and
# renormalizes what is left, which is the 0.01 * 0.01 agreement on class 2.
# The impartial rule adds back the per-class average of both experts, so the
# fused opinion splits between the two favourites.

# %%
a, b = (DirichletOpinion.from_json(o) for o in report["opinions"])
print("DS   ", ds_combine_pair(a, b).opinion)
print("IDer ", ider_combine_pair(a, b).opinion)

# %% [markdown]
# The impartial rule is commutative but not associative.  Chaining views is a
# left-to-right fold, so view order is part of the result.

# %%
c0 = DirichletOpinion([1.0, 0.0, 0.0], 0.0)
vac = DirichletOpinion.vacuous(3)
for order in ([c0, c0, vac], [vac, c0, c0]):
    out = ider_combine_all(order)
    print([round(o.uncertainty, 3) for o in order], "->", out.opinion)

# %% [markdown]
# Sweep the conflict: move expert 2 from agreeing with expert 1 to fully
# opposing it and watch the belief both rules put on class 2.

# %%
print(f"{'t':>5} {'C':>8} {'DS b2':>8} {'IDer b2':>8}")
for t in np.linspace(0.0, 0.99, 12):
    e2 = DirichletOpinion([0.99 - t, t, 0.01], 0.0)
    ds = ds_combine_pair(a, e2)
    ider = ider_combine_pair(a, e2)
    print(f"{t:5.2f} {ds.conflict:8.4f} {ds.opinion.beliefs[2]:8.4f} {ider.opinion.beliefs[2]:8.4f}")
