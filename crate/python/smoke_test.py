"""Smoke test for the Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import cmath
import math

import vortex_chorus as vc


def polygon(n, r):
    return [r * cmath.exp(2j * math.pi * k / n) for k in range(n)]


def main():
    spec = vc.SystemSpec.euler([1.0] * 4)
    z0 = [0.6 + 0.1j, -0.4 + 0.5j, -0.3 - 0.6j, 0.5 - 0.4j]
    traj = vc.flow(spec, z0, 5.0, 1e-10)
    drift = traj.drift()
    assert max(drift.values()) < 1e-8, drift
    assert abs(traj.energy[0] - vc.energy(spec, z0)) < 1e-15

    tri = vc.SystemSpec.euler([1.0] * 3)
    re = vc.find_relative_equilibrium(tri, polygon(3, 1.0), 3.0)
    assert re["residual"] < 1e-10
    assert abs(re["omega"] + 2 / (4 * math.pi)) < 1e-12

    p = vc.hopf_project(z0)
    q = p
    for _ in range(4):
        q = vc.sigma1(q)
    assert vc.fs_distance(p, q) < 1e-12

    s = vc.SphereMap(6, "cpn2")
    assert s.equivariance_defect([0.3 + 0.2j, -1.5j, 4.0]) < 1e-12
    assert abs(s.fs_area("full") - math.pi) < 1e-6

    assert abs(vc.polygon_trap_coefficient(0.7, 0.4, 3) - 2 * 0.2**3) < 1e-14

    bec = vc.SystemSpec.bec([1.0] * 3, mu=1.0, lam=1.0)
    found = vc.search(bec, {"i_level": 0.3, "n_starts": 4, "seed": 1})
    for orbit in found:
        assert orbit["residual"] < 1e-9
    assert found == vc.search(bec, {"i_level": 0.3, "n_starts": 4, "seed": 1})

    try:
        vc.energy(spec, [0j, 0j, 1 + 0j, 1j])
    except vc.DomainError:
        pass
    else:
        raise AssertionError("collision not reported")

    print(f"ok: drift {max(drift.values()):.1e}, {len(found)} orbits from 4 starts")


if __name__ == "__main__":
    main()
