# Regenerates welch_oracle.json. Requires numpy and scipy.
import json

import numpy as np
import scipy
from scipy import stats

rng = np.random.default_rng(20240611)
cases = []
for i in range(100):
    nc, nr = int(rng.integers(2, 41)), int(rng.integers(2, 41))
    scale = float(10 ** rng.uniform(-3, 3))
    c = (rng.normal(rng.uniform(-1, 1) * scale, scale * rng.uniform(0.1, 2), nc)).tolist()
    r = (rng.normal(rng.uniform(-1, 1) * scale, scale * rng.uniform(0.1, 2), nr)).tolist()
    res = stats.ttest_ind(c, r, equal_var=False)
    p = float(rng.choice([0.9, 0.95, 0.975, 0.99, 0.05, 0.2]))
    cases.append(dict(candidate=c, reference=r, t=float(res.statistic), df=float(res.df), p=p,
                      quantile=float(stats.t.ppf(p, res.df))))
json.dump(dict(generator="scipy.stats.ttest_ind(equal_var=False) and scipy.stats.t.ppf, scipy " + scipy.__version__,
               cases=cases), open("welch_oracle.json", "w"), indent=1)
