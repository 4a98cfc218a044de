import pandas as pd

COORDINATES = ('x', 'y')


def elements_frame(elements, t=None):
    """One row per node and slice: slice, t, s, x, y, z, p, H1, H2."""
    rows = []
    for b, ie in enumerate(elements):
        curve = ie.curve
        for k in range(curve.K):
            row = {'slice': b, 't': None if t is None else float(t[b]), 's': float(curve.grid.nodes[k])}
            for j in range(curve.n):
                row[COORDINATES[j]] = float(curve.x[j, k])
            for i in range(curve.m):
                row['z' if curve.m == 1 else f'z{i + 1}'] = float(curve.z[i, k])
                row['p' if curve.m == 1 else f'p{i + 1}'] = float(ie.p[i, k])
            for j in range(curve.n):
                row[f'H{j + 1}'] = float(ie.H[j, k])
            rows.append(row)
    return pd.DataFrame(rows)


def solution_frame(solution):
    """Direct-solver samples as (y, x, z) rows."""
    grid = solution.grid
    return pd.DataFrame({
        'y': solution.y.repeat(grid.K),
        'x': list(grid.nodes) * solution.y.size,
        'z': solution.z.reshape(-1),
    })
