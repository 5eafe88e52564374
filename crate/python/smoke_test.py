"""Smoke test for the pylangevin extension module."""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pylangevin as pl


def main():
    g = 2.0
    c = pl.friction_constant(g)
    assert abs(c - (g / 2 + math.sqrt(g * g / 4 + 1))) < 1e-14

    sw = pl.Potential.single_well(2)
    assert sw.dim == 2
    assert abs(sw.value([1.0, 0.0]) - 0.5) < 1e-14
    assert sw.gradient([1.0, -2.0]) == [1.0, -2.0]

    zeta_sq, sigma = pl.villani_certificate(2.0, 1.0, 1, 1.0, 1.0)
    assert abs(sigma - 0.12773958089728293) < 1e-15, sigma

    dw = pl.Potential.double_well(1)
    cert = pl.certify(dw, 1.0, 1.0, 1, 1, 1.0)
    doc = json.loads(cert.to_json())
    assert doc["sigma"] == cert.sigma > 0
    pts = pl.sample_invariant(dw, 1.0, 1.0, 200, seed=1)
    violations, _ = cert.drift_check(pts)
    assert violations == 0

    sp = pl.Potential.singular_pair(2, 1)
    gc = pl.growth_constants_singular(2, 1, 1.0, 1.0, 2, 6.0, 1.0)
    assert "c0" in gc and sp.dim == 2

    rows = pl.stationary_autocovariance(sw, 2.0, 1.0, 1000, 2e-3, 4.0, seed=3)
    rate, se = pl.estimate_decay_rate(rows, 2.0)
    assert rate > 0 and se > 0

    try:
        pl.friction_constant(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative friction accepted")

    print(f"ok sigma={cert.sigma:.6e} rate={rate:.4f}+-{se:.4f}")


if __name__ == "__main__":
    main()
