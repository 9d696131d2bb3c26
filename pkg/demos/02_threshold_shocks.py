"""From anomalies to conditioned weather-shock series.

A period counts as a shock only when its regional anomaly clears the
threshold (by default the 2001-2021 mean deviation) plus the requested
sign, season and magnitude filters; everything else becomes an exact
zero so regression designs keep a full time axis.
"""

import numpy as np

from climfact import (
    ShockConditioning,
    anomaly,
    compute_baseline,
    default_threshold,
    make_shocks,
    regional_mean,
    shock_variants,
)
from climfact.synth import ea_domain, normals_series

series = normals_series(ea_domain(step=2.0), "temperature", warming=1.3)
baseline = compute_baseline(series)
regional = regional_mean(anomaly(series, baseline))
window = regional.slice_window(np.datetime64("2001-01"),
                               np.datetime64("2021-12"))

# the default threshold is the mean deviation over the analysis window
threshold = default_threshold(window, (2001, 2021))
print(f"auto threshold: {threshold:.4f}")

# the standard battery of conditioned variants
table = shock_variants(window, threshold, extreme_multiplier=1.5)
print("\nvariant      events   mean nonzero")
for name, shock in table.items():
    nz = shock.values[shock.values != 0.0]
    mean = f"{nz.mean():+.3f}" if nz.size else "   -"
    print(f"{name:<12} {shock.n_events:>6}   {mean}")

# seasonal series partition the all-season one exactly
seasonal = sum(table[s].values for s in ("spring", "summer",
                                         "autumn", "winter"))
print("\nseason partition exact:",
      bool(np.array_equal(seasonal, table['all'].values)))

# a custom filter: negative extremes in winter
custom = make_shocks(window, threshold,
                     ShockConditioning(sign="negative", season="winter",
                                       extreme_multiplier=1.2))
print(f"negative winter extremes: {custom.n_events} events")
