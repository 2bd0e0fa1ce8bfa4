"""Independent reference computations used by the tests.

Nothing here imports the production association or posterior code.
"""

import itertools
import math


def brute_force_jipda(likelihoods, existences, P_D, P_G, lam):
    """Posterior existence, beta and beta0 by literal enumeration.

    ``likelihoods[i][j]`` is the gated likelihood of measurement i under track j
    (0 means outside the gate). Pure python lists, no numpy.
    """
    m = len(likelihoods)
    n = len(existences)
    d = P_D * P_G
    choices = [[None] + [i for i in range(m) if likelihoods[i][j] > 0] for j in range(n)]

    events = []
    for combo in itertools.product(*choices):
        used = [i for i in combo if i is not None]
        if len(used) != len(set(used)):
            continue
        w = 1.0
        for j, i in enumerate(combo):
            if i is None:
                w *= 1.0 - d * existences[j]
            else:
                w *= d * existences[j] * likelihoods[i][j] / lam
        events.append((combo, w))

    C = sum(w for _, w in events)
    prob = [(combo, w / C) for combo, w in events]

    existence_post = []
    beta = [[0.0] * n for _ in range(m)]
    beta0 = []
    for j in range(n):
        p = existences[j]
        assoc = [sum(pr for combo, pr in prob if combo[j] == i) for i in range(m)]
        missed = sum(pr for combo, pr in prob if combo[j] is None)
        joint_missed = (1.0 - d) * p / (1.0 - d * p) * missed
        post = joint_missed + sum(assoc[i] for i in range(m) if likelihoods[i][j] > 0)
        existence_post.append(post)
        if post > 0:
            for i in range(m):
                beta[i][j] = assoc[i] / post
            beta0.append(joint_missed / post)
        else:
            beta0.append(1.0)
    return existence_post, beta, beta0, len(events)


def count_injective_partial_assignments(gate):
    """Number of partial matchings of a boolean gate matrix (rows=measurements)."""
    m = len(gate)
    n = len(gate[0]) if m else 0
    total = 0
    for combo in itertools.product(*[[None] + [i for i in range(m) if gate[i][j]] for j in range(n)]):
        used = [i for i in combo if i is not None]
        if len(used) == len(set(used)):
            total += 1
    return total


def textbook_kalman_update(x, P, z, H, R):
    """Standard Kalman correction with an explicit matrix inverse."""
    import numpy as np

    S = H @ P @ H.T + R
    K = P @ H.T @ np.linalg.inv(S)
    x_new = x + K @ (z - H @ x)
    P_new = (np.eye(P.shape[0]) - K @ H) @ P
    return x_new, P_new


def central_difference(f, x, h=1e-6):
    import numpy as np

    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def min_cost_by_permutation(cost):
    """Exhaustive rectangular assignment minimum (all rows or all columns matched)."""
    rows, cols = len(cost), len(cost[0]) if cost else 0
    if rows == 0 or cols == 0:
        return 0.0
    best = math.inf
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            best = min(best, sum(cost[r][perm[r]] for r in range(rows)))
    else:
        for perm in itertools.permutations(range(rows), cols):
            best = min(best, sum(cost[perm[c]][c] for c in range(cols)))
    return best
