"""Synthetic monthly panels with a known seasonal pattern."""
import numpy as np
import pandas as pd


def sinusoid(lam, peak_month):
    """Twelve log-point factors ``lam * cos((m - peak) * pi / 6)``."""
    m = np.arange(1, 13)
    return lam * np.cos((m - peak_month) * np.pi / 6.0)


def seasonal_panel(pattern, rng, units=30, years=10, drift=0.004, noise_sd=0.0,
                   drop_rate=0.0, drop_months=(), drop_in_months=0.0, clusters=10,
                   start_year=2005):
    """Log series ``level + drift * t + pattern[month] + noise`` for several units.

    ``drop_rate`` removes observations at random anywhere; ``drop_in_months``
    removes observations falling in ``drop_months`` with that probability.
    """
    pattern = np.asarray(pattern, float)
    rows = []
    for u in range(units):
        level = rng.normal(0.0, 0.5)
        for t in range(12 * years):
            y, m = start_year + t // 12, t % 12 + 1
            if drop_rate and rng.random() < drop_rate:
                continue
            if m in drop_months and rng.random() < drop_in_months:
                continue
            v = level + drift * t + pattern[m - 1] + (rng.normal(0.0, noise_sd) if noise_sd else 0.0)
            rows.append((f"u{u:03d}", f"c{u % clusters:02d}", y, m, v))
    return pd.DataFrame(rows, columns=["unit_id", "cluster_id", "year", "month", "value"])


def circular_month_error(a, b):
    d = abs((a - b) % 12.0)
    return min(d, 12.0 - d)
