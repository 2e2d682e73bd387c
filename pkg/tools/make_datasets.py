"""Generate the vendored dataset CSVs under src/memdpe/data/datasets/.

iris/wine/breast_cancer are the canonical scikit-learn copies of the UCI
files. banknote is a synthetic surrogate with the canonical UCI shape
(1372 rows, 4 features, 762/610 class split) built from a Gaussian mixture
tuned to give a comparable linear separability, since the sandbox has no
dataset network access.
"""
import csv
import hashlib
import os

import numpy as np
from sklearn import datasets as skds

OUT = "src/memdpe/data/datasets"
os.makedirs(OUT, exist_ok=True)


def write_csv(name, header, feats, labels):
    path = os.path.join(OUT, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, lab in zip(feats, labels):
            w.writerow([f"{v:.6g}" for v in row] + [int(lab)])
    return path


paths = []
iris = skds.load_iris()
paths.append(write_csv("iris", ["sepal_len", "sepal_wid", "petal_len", "petal_wid", "class"],
                       iris.data, iris.target))
wine = skds.load_wine()
paths.append(write_csv("wine", [f"f{i}" for i in range(13)] + ["class"],
                       wine.data, wine.target))
bc = skds.load_breast_cancer()
paths.append(write_csv("breast_cancer", [f"f{i}" for i in range(30)] + ["class"],
                       bc.data, bc.target))

# banknote surrogate: 762 genuine (class 0), 610 forged (class 1)
rng = np.random.default_rng(1372)
n0, n1 = 762, 610
mean0 = np.array([2.2, 4.3, -1.1, -1.2])
mean1 = np.array([-1.9, -0.8, 2.4, -1.0])
cov0 = np.diag([2.0, 3.4, 2.1, 2.0]) ** 2
cov1 = np.diag([1.9, 3.2, 2.6, 2.1]) ** 2
x0 = rng.multivariate_normal(mean0, cov0, size=n0)
x1 = rng.multivariate_normal(mean1, cov1, size=n1)
feats = np.vstack([x0, x1])
labels = np.array([0] * n0 + [1] * n1)
perm = rng.permutation(len(labels))
paths.append(write_csv("banknote", ["variance", "skewness", "curtosis", "entropy", "class"],
                       feats[perm], labels[perm]))

with open(os.path.join(OUT, "checksums.txt"), "w") as fh:
    for p in paths:
        digest = hashlib.sha256(open(p, "rb").read()).hexdigest()
        fh.write(f"{digest}  {os.path.basename(p)}\n")
        print(digest, p)
