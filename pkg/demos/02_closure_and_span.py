"""
Bootstrap closure, spanned parallelograms and droplets
======================================================

A random configuration is closed under the isotropic rules, and the merge
tree of its closure components is scanned for parallelograms at the
critical scale.  The covering algorithm then groups the infections into
disjoint droplets.
"""
import numpy as np

from ukcm.bootstrap import Configuration, closure, cover, region_box, span, spanned_scan
from ukcm.family import corpus_family
from ukcm.geometry import ConstantPack
from ukcm.kcm import sample_equilibrium

iso = corpus_family("fig1g")
R = region_box(24, 12)
eta = sample_equilibrium(R, 0.12, seed=3)
print(eta.render())
print()
print(closure(eta, iso).render())

# A desk-scale pack: K/C1 = 2 and K = 6, so a handful of infections can
# span a critical parallelogram.
pack = ConstantPack.make_micro(iso, K=6.0, C1=3.0, C2p=3.5)
tree = span(eta, iso, pack)
print(len(tree.nodes), "span-tree nodes,", len(tree.roots), "roots")
for box in spanned_scan(eta, iso, pack, *pack.critical_range, tree=tree):
    print("critical:", box, "diameter %.2f" % box.diameter)

# Covering: far-apart groups stay separate droplets, close ones merge.
pack = ConstantPack.default(iso)
rng = np.random.default_rng(0)
Z = [tuple(p) for p in rng.integers(0, 20000, (8, 2))]
ds = cover(Z, iso, pack)
print(len(ds.clusters), "clusters ->", len(ds), "droplets after", len(ds.history), "merges")
