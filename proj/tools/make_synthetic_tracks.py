"""Writes data/synthetic_tracks.csv: straight-line storm tracks around the
northern Gulf used to populate the heading model.

The tracks are invented for demonstration; they only need plausible headings,
intensities and positions relative to the capture zone.
"""

import csv
import math
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic_tracks.csv"
KM_PER_DEG = 111.195


def main(n_storms: int = 400, seed: int = 7) -> None:
    rng = np.random.default_rng(seed)
    rows = []
    for s in range(n_storms):
        # Headings: mostly north-northwest with a recurving north-east mode.
        if rng.random() < 0.65:
            heading = rng.normal(-15.0, 25.0)
        else:
            heading = rng.normal(35.0, 20.0)
        heading = (heading + 180.0) % 360.0 - 180.0
        landfall_lon = rng.uniform(-97.0, -82.0)
        landfall_lat = 29.5
        peak_dp = min(140.0, 8.0 + 25.79 * rng.weibull(1.197))
        vf = float(np.exp(rng.normal(2.95, 0.45)))
        rmax = float(np.exp(rng.normal(4.1, 0.4)))
        h = math.radians(heading)
        year = 1950 + s // 6
        for step in range(-8, 5):
            dist = step * vf * 6.0
            lat = landfall_lat + dist * math.cos(h) / KM_PER_DEG
            lon = landfall_lon + dist * math.sin(h) / (KM_PER_DEG * math.cos(math.radians(landfall_lat)))
            # Intensity peaks shortly before landfall and decays inland.
            dp = max(8.0, peak_dp * math.exp(-0.5 * ((step + 1) / 3.0) ** 2))
            rows.append([
                f"S{s:04d}", f"{year}-08-{1 + s % 28:02d}T{(step + 8) * 6 % 24:02d}:00",
                f"{lat:.4f}", f"{lon:.4f}", f"{dp:.2f}", f"{vf:.2f}", f"{rmax:.2f}", f"{heading:.2f}",
            ])
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["storm_id", "timestamp", "lat", "lon", "dp_hpa", "vf_kmh", "rmax_km", "theta_deg"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
