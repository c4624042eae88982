"""Smoke test for the compiled `sumrule` extension module."""

import math

import sumrule

ZETA3 = 1.2020569031595942


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a!r} vs {b!r} (tol {tol})"


def main():
    flat = sumrule.DensityModel.homogeneous()
    close(sumrule.z_tilde(1.5, flat).total, ZETA3 / math.pi**3, 1e-9)

    for kappa in (0.1, 0.5):
        d = sumrule.DensityModel.linear(kappa)
        close(sumrule.z1_exact(d).total, 1 / 6 - kappa**2 / 120, 1e-12)
        e = sumrule.e0_series(d, 2)
        close(e[0], 1.0, 1e-12)
        close(e[1], -kappa**2 / 120, 1e-9)

    levels = sumrule.spectrum(sumrule.DensityModel.linear(0.2), 201)
    assert levels[0] == 0.0
    assert all(a < b for a, b in zip(levels, levels[1:]))

    num = sumrule.z_numerical(1.5, 0.1, 100, 401)
    pert = sumrule.z_tilde(1.5, sumrule.DensityModel.linear(0.1))
    close(num.total, pert.total, 1e-6)
    assert num.route == "numerical_spectrum"

    coeffs, residual = sumrule.polyfit([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0], 1)
    close(coeffs[0], 1.0, 1e-12)
    close(coeffs[1], 2.0, 1e-12)
    close(residual, 0.0, 1e-12)

    c0, c2, d, bound = sumrule.z32_constants(1000)
    close(c0, ZETA3 / math.pi**3, 1e-14)
    close(d, 0.000539831, 1e-6)
    assert bound > 0

    try:
        sumrule.DensityModel.linear(3.0)
    except ValueError:
        pass
    else:
        raise AssertionError("kappa = 3 should be rejected")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
