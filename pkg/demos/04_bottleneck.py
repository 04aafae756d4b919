"""
Exhaustive bottleneck verification
==================================

On a 4x4 region every configuration is one of 2^16 bitmasks, so the set
of 0-good configurations and everything reachable from it by legal flips
can be enumerated outright.  The shipped micro instance verifies; the
degenerate one (where two adjacent infections are already critical) breaks
after a single flip.
"""
from fractions import Fraction

from ukcm.bootstrap import region_box
from ukcm.family import corpus_family
from ukcm.geometry import ConstantPack, Parallelogram
from ukcm.kcm import BottleneckInstance, verify_bottleneck

fam = corpus_family("fig1e")
pack = ConstantPack.make_micro(fam, K=4.5, C1=3.0, C2p=3.5)
inst = BottleneckInstance(fam, region_box(4, 4), pack, n=0, core=Parallelogram.box(1, 1, 2, 2),
                          ell=Fraction(3), h=Fraction(3))
res = verify_bottleneck(inst)
print(type(res).__name__, res.stats)

R = region_box(3, 2)
pack = ConstantPack.make_micro(fam, K=1.5, C1=3.0, C2p=3.5)
res = verify_bottleneck(BottleneckInstance(fam, R, pack, n=1, core=R, ell=Fraction(3), h=Fraction(2)))
print(type(res).__name__)
for c in res.path:
    print(c.render())
    print()
