"""Regenerates parabola_obstacle_1d.oracle.grid.

Projected SOR on the linear complementarity problem of the 1-D obstacle
problem for t^2: find u >= psi with (2u_i - u_{i-1} - u_{i+1}) >= 0 and
equality off the contact set, u = 0 at both ends.
"""

N = 512
OMEGA = 1.9


def psi(x):
    return 0.4 - 3.0 * (x - 0.45) ** 2


def main():
    h = 1.0 / N
    xs = [i * h for i in range(N + 1)]
    obstacle = [psi(x) for x in xs]
    u = [max(p, 0.0) for p in obstacle]
    u[0] = u[N] = 0.0
    while True:
        change = 0.0
        for i in range(1, N):
            nxt = max((1.0 - OMEGA) * u[i] + OMEGA * 0.5 * (u[i - 1] + u[i + 1]), obstacle[i])
            change = max(change, abs(nxt - u[i]))
            u[i] = nxt
        if change < 1e-15:
            break
    lines = ["n 1", f"dims {N + 1}", f"h {h!r}", "origin 0", "values", " ".join(repr(v) for v in u)]
    with open("parabola_obstacle_1d.oracle.grid", "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
