"""Reference values for the statistics tests, computed with SciPy.

Run: python3 tests/oracle/stats_reference.py
The printed values are frozen into tests/test_stats.cpp and the acceptance suite.
"""
from scipy import stats, special

SETS = [
    ([2.1, 2.0, 2.2], [3.1, 3.0, 3.2], [2.5, 2.7, 2.6]),
    ([1.2, 3.4, 2.2, 5.1, 0.7], [2.9, 4.4, 3.8, 6.0, 5.2, 4.1], [1.0, 1.5, 0.9, 2.2]),
    ([10.5, 11.2, 9.8, 10.1, 12.3], [9.1, 8.7, 9.9, 10.2, 8.8], [10.0, 10.4, 10.1, 9.9, 10.3]),
    ([0.01, 0.03, 0.02, 0.05], [0.04, 0.02, 0.06, 0.05, 0.07], [0.03, 0.03, 0.02]),
    ([-1.0, 0.5, 2.3, -0.7, 1.1, 0.0], [-0.2, 0.8, 1.9, -1.4], [3.3, 2.2, 4.1, 2.9, 3.6]),
]

for i, (a, b, c) in enumerate(SETS):
    w = stats.ttest_ind(a, b, equal_var=False)
    p = stats.ttest_ind(a, b, equal_var=True)
    f = stats.f_oneway(a, b, c)
    print(f"set{i}: welch t={w.statistic!r} p={w.pvalue!r} df={w.df!r}")
    print(f"set{i}: pooled t={p.statistic!r} p={p.pvalue!r}")
    print(f"set{i}: anova F={f.statistic!r} p={f.pvalue!r}")

for a, b, x in [(0.5, 0.5, 0.3), (2.0, 3.0, 0.4), (10.0, 0.5, 0.9), (0.5, 10.0, 0.01), (50.0, 40.0, 0.55), (1.5, 7.25, 0.2)]:
    print(f"betainc({a},{b},{x})={special.betainc(a, b, x)!r}")
