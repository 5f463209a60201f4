"""Reference rank-test values for tests/stats_oracles.rs (scipy)."""

from scipy import stats

KW = {
    "interleaved": [[1, 3, 5, 7, 9], [2, 4, 6, 8, 10]],
    "three_groups": [[2.9, 3.0, 2.5, 2.6, 3.2], [3.8, 2.7, 4.0, 2.4], [2.8, 3.4, 3.7, 2.2, 2.0]],
    "heavy_ties": [[1, 1, 2, 2, 3], [2, 3, 3, 4], [1, 4, 4, 4, 5, 5]],
    "four_groups": [[0.1, 0.2, 0.3], [0.25, 0.35, 0.45, 0.55], [0.5, 0.6, 0.7], [0.65, 0.8, 0.9, 1.0, 1.1]],
}

WILCOXON = {
    "exact_8": ([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], [0.15, 0.1, 0.45, 0.6, 0.41, 0.95, 0.82, 1.13]),
    "exact_12": (
        [0.0] * 12,
        [1.1, -2.3, 3.2, 4.7, -0.4, 5.9, 6.1, 7.6, -8.8, 9.3, 10.2, 11.5],
    ),
    "approx_ties": (
        [0.0] * 20,
        [1, 1, -1, 2, 2, 2, -2, 3, 3, 0, 4, -4, 5, 5, 5, 6, 0, 7, -7, 8],
    ),
}

for name, groups in KW.items():
    r = stats.kruskal(*groups)
    print(f"kw {name} {float(r.statistic)!r} {float(r.pvalue)!r}")

for name, (before, after) in WILCOXON.items():
    d = [a - b for b, a in zip(before, after)]
    method = "approx" if "approx" in name else "exact"
    r = stats.wilcoxon(d, zero_method="wilcox", correction=True, method=method, alternative="two-sided")
    pos = stats.wilcoxon(d, zero_method="wilcox", correction=True, method=method, alternative="greater")
    # scipy reports min(W+, W-) for two-sided; the one-sided statistic is W+
    print(f"wilcoxon {name} {float(pos.statistic)!r} {float(r.pvalue)!r}")
