"""Smoke test for the kerr_born_py extension module."""

import math

import kerr_born_py as kb


def main():
    grid = kb.Grid("interval", 129)
    solver = kb.GreenSolver(grid, 1.0)
    mu = solver.mu()
    assert 0.5 < mu < 2.0, mu

    u0 = solver.background((0.0, 0.0), 1.0)
    assert len(u0) == len(grid)

    bump = [math.exp(-((x - 0.5) ** 2) / 0.005) if 0 < x < 1 else 0.0 for x, _ in grid.coords]
    alpha = [0.05 * b for b in bump]
    beta = [0.05 * b for b in bump]
    u, report = solver.fixed_point_solve(alpha, beta, u0)
    assert report["converged"], report
    u8, norms = solver.born_series(alpha, beta, u0, 8)
    assert max(abs(a - b) for a, b in zip(u, u8)) < 1e-8
    assert [t["order"] for t in norms] == list(range(1, 9))

    assert kb.nu_sequence(1.0, 5)[:3] == [1.0, 2.0, 8.0]
    r, c = kb.inverse_radius(0.7, 3.0, 0.5, 0.1)
    assert c == 2.0 and abs(r - (math.sqrt(65) - 8) / 4.2) < 1e-12
    assert len(kb.triples(4)) == 15
    assert kb.compositions(4, 2) == [[1, 3], [2, 2], [3, 1]]

    scenario = kb.Scenario.interval_preset()
    scenario.scale_medium(0.25)
    scenario.order = 3
    data = kb.synthesize(scenario)
    assert data.shape == (72, 2)
    again = kb.ScatteringData.from_csv(data.to_csv())
    assert again.values == data.values

    rec = kb.reconstruct(scenario, data)
    assert len(rec.trajectory) == 3
    assert rec.trajectory[-1] < rec.trajectory[0], rec.trajectory
    report = rec.report()
    assert report["diagnostics"]["order"] == 3

    try:
        kb.Grid("sphere", 10)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown domain accepted")

    print("smoke test passed: trajectory", ", ".join(f"{e:.3f}" for e in rec.trajectory))


if __name__ == "__main__":
    main()
