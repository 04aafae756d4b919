"""
Classifying the shipped update families
=======================================

Each corpus family is parsed from its ``.fam`` file, its stable set is
computed exactly, and the difficulties of the isolated stable directions
are found by a bounded search with a checkable growth certificate.
"""
from ukcm.family import CORPUS, classify, corpus_family, stable_set

for name in sorted(CORPUS):
    fam = corpus_family(name)
    rep = classify(fam)
    print(f"{name}: {rep.summary()}")

# The isotropic family has four rules, each a pair of orthogonal neighbours.
iso = corpus_family("fig1g")
print(iso.to_text())
print("stable set:", stable_set(iso))

# Difficulties come with certificates; the witness semicircle fixes alpha.
rep = classify(corpus_family("fig1a"))
for u, d in rep.difficulties.items():
    print(u, d)
print("witness:", rep.witness)
