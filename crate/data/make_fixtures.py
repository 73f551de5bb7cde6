"""Regenerates the synthetic fixture networks in this directory.

Each network is written in the native format. The script also brute-forces
every topology with scipy's HiGHS LP on a few sampled demand vectors and
prints congestion and switching statistics, which guided the parameter
choices below.

    python3 data/make_fixtures.py [--check]
"""

import itertools
import math
import random
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

HERE = Path(__file__).resolve().parent


class Net:
    def __init__(self, base=100.0):
        self.base = base
        self.buses = []  # (id, demand, slack)
        self.gens = []  # (bus, cost, pmin, pmax)
        self.lines = []  # (id, from, to, b_pu, cap, switchable)

    def write(self, path, header):
        out = [f"# {h}" for h in header] + [f"base {self.base:g}"]
        for i, d, s in self.buses:
            out.append(f"bus {i} {d:g}" + (" slack" if s else ""))
        for b, c, lo, hi in self.gens:
            out.append(f"gen {b} {c:g} {lo:g} {hi:g}")
        for lid, f, t, b, cap, sw in self.lines:
            out.append(f"line {lid} {f} {t} {b:g} {cap:g}" + (" switchable" if sw else ""))
        path.write_text("\n".join(out) + "\n")

    def switchable(self):
        return [k for k, l in enumerate(self.lines) if l[5]]


def opf(net, demand, closed):
    """DC dispatch cost with the given line-closed mask, None if infeasible."""
    idx = {b[0]: i for i, b in enumerate(net.buses)}
    n, g = len(net.buses), len(net.gens)
    live = [l for l, on in zip(net.lines, closed) if on]
    m = len(live)
    nv = g + n + m
    c = np.zeros(nv)
    c[:g] = [x[1] for x in net.gens]
    bounds = [(x[2], x[3]) for x in net.gens]
    slack = next(i for i, b in enumerate(net.buses) if b[2])
    bounds += [(0, 0) if i == slack else (None, None) for i in range(n)]
    bounds += [(-l[4], l[4]) for l in live]
    a_eq, b_eq = [], []
    for i in range(n):
        row = np.zeros(nv)
        for j, gen in enumerate(net.gens):
            if idx[gen[0]] == i:
                row[j] = -1
        for k, l in enumerate(live):
            if idx[l[1]] == i:
                row[g + n + k] += 1
            if idx[l[2]] == i:
                row[g + n + k] -= 1
        a_eq.append(row)
        b_eq.append(-demand[i])
    for k, l in enumerate(live):
        row = np.zeros(nv)
        bb = net.base * l[3]
        row[g + n + k] = 1
        row[g + idx[l[1]]] -= bb
        row[g + idx[l[2]]] += bb
        a_eq.append(row)
        b_eq.append(0)
    r = linprog(c, A_eq=np.array(a_eq), b_eq=b_eq, bounds=bounds, method="highs")
    return r.fun if r.status == 0 else None


def sample(net, rng, p=0.1):
    return [d * (1 + p * rng.uniform(-1, 1)) for _, d, _ in net.buses]


def study(net, name, draws=6, seed=0):
    rng = random.Random(seed)
    sw = net.switchable()
    tops = []
    savings = []
    for _ in range(draws):
        d = sample(net, rng)
        best, arg = math.inf, None
        all_on = None
        for bits in itertools.product([1, 0], repeat=len(sw)):
            closed = [True] * len(net.lines)
            for k, on in zip(sw, bits):
                closed[k] = bool(on)
            v = opf(net, d, closed)
            if all(bits):
                all_on = v
            if v is not None and v < best - 1e-9:
                best, arg = v, bits
        tops.append(arg)
        if all_on is not None:
            savings.append(100 * (all_on - best) / all_on)
    print(f"{name}: {len(set(tops))} distinct optimal topologies in {draws} draws; "
          f"mean savings {np.mean(savings) if savings else float('nan'):.2f}% "
          f"(all-on infeasible in {draws - len(savings)})")


def braess_chain(gadgets=6, seed=3):
    """Triangles with a cheap and an expensive unit feeding a load; the weak
    chord between the two units is switchable. Load buses chain into the next
    triangle's cheap bus."""
    rng = random.Random(seed)
    net = Net()
    bid = 1
    lid = 1
    prev_load = None
    for i in range(gadgets):
        a, b, c = bid, bid + 1, bid + 2
        bid += 3
        load = rng.uniform(60, 140)
        net.buses += [(a, 0, i == 0), (b, 0, False), (c, round(load, 1), False)]
        net.gens.append((a, round(rng.uniform(8, 15), 1), 0, 250))
        net.gens.append((b, round(rng.uniform(40, 60), 1), 0, 250))
        chord = round(rng.uniform(0.15, 0.35) * load, 1)
        net.lines.append((lid, a, c, 10, 250, False))
        net.lines.append((lid + 1, b, c, 10, 250, False))
        net.lines.append((lid + 2, a, b, round(rng.uniform(6, 14), 1), chord, True))
        lid += 3
        if prev_load is not None:
            net.lines.append((lid, prev_load, a, 8, 120, False))
            lid += 1
        prev_load = c
    return net


def synthetic(n, s, seed, gen_share=0.35, cap_scale=0.7, tree_headroom=1.35):
    """Random planar-ish network: minimum spanning tree of random points is
    fixed, `s` extra short edges are switchable. Capacities are a fraction of
    the all-closed flows of a merit-order dispatch so that loops congest."""
    rng = random.Random(seed)
    pts = [(rng.random(), rng.random()) for _ in range(n)]
    dist = lambda i, j: math.dist(pts[i], pts[j])
    # Prim's tree.
    inside = {0}
    tree = []
    while len(inside) < n:
        i, j = min(((i, j) for i in inside for j in range(n) if j not in inside), key=lambda e: dist(*e))
        tree.append((i, j))
        inside.add(j)
    cand = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in tree and (j, i) not in tree),
        key=lambda e: dist(*e),
    )
    extra = cand[:s]
    net = Net()
    gens = set(rng.sample(range(n), max(2, round(gen_share * n))))
    total = 0.0
    for i in range(n):
        d = 0.0 if i in gens else round(rng.uniform(20, 80), 1)
        total += d
        net.buses.append((i + 1, d, i == 0))
    for i in sorted(gens):
        net.gens.append((i + 1, round(rng.uniform(10, 60), 1), 0, round(1.6 * total / len(gens), 1)))
    edges = [(e, False) for e in tree] + [(e, True) for e in extra]
    for lid, ((i, j), sw) in enumerate(edges, start=1):
        b = round(1.0 / max(dist(i, j), 0.05), 2)
        net.lines.append((lid, i + 1, j + 1, b, 1.0, sw))
    # Size capacities from the uncongested merit-order flows.
    flows = merit_flows(net)
    tree_flows = merit_flows(net, tree_only=True)
    lines = []
    for l, f, ft in zip(net.lines, flows, tree_flows):
        cap = max(10.0, round(cap_scale * abs(f) + rng.uniform(0, 15), 1))
        if not l[5]:
            cap = round(tree_headroom * max(abs(f), abs(ft)) + 5, 1)
        lines.append(l[:4] + (cap,) + l[5:])
    net.lines = lines
    # Widen the chords until the all-closed network serves 110% load.
    peak = [1.1 * b[1] for b in net.buses]
    while opf(net, peak, [True] * len(net.lines)) is None:
        net.lines = [l[:4] + (round(l[4] * 1.1, 1),) + l[5:] if l[5] else l for l in net.lines]
    return net


def merit_flows(net, tree_only=False):
    """Uncongested least-cost flows; open chords report zero."""
    idx = {b[0]: i for i, b in enumerate(net.buses)}
    n, g, m = len(net.buses), len(net.gens), len(net.lines)
    demand = [b[1] for b in net.buses]
    nv = g + n + m
    c = np.zeros(nv)
    c[:g] = [x[1] for x in net.gens]
    bounds = [(x[2], x[3]) for x in net.gens] + [(0, 0)] + [(None, None)] * (n - 1) + [(None, None)] * m
    a_eq, b_eq = [], []
    for i in range(n):
        row = np.zeros(nv)
        for j, gen in enumerate(net.gens):
            if idx[gen[0]] == i:
                row[j] = -1
        for k, l in enumerate(net.lines):
            row[g + n + k] += (idx[l[1]] == i) - (idx[l[2]] == i)
        a_eq.append(row)
        b_eq.append(-demand[i])
    for k, l in enumerate(net.lines):
        row = np.zeros(nv)
        row[g + n + k] = 1
        if tree_only and l[5]:
            bounds[g + n + k] = (0, 0)
        else:
            row[g + idx[l[1]]] -= net.base * l[3]
            row[g + idx[l[2]]] += net.base * l[3]
        a_eq.append(row)
        b_eq.append(0)
    r = linprog(c, A_eq=np.array(a_eq), b_eq=b_eq, bounds=bounds, method="highs")
    return r.x[g + n:]


FIXTURES = {
    "braess6": (lambda: braess_chain(6, seed=3), "Six chained three-bus triangles; each weak chord is switchable."),
    "mesh8": (lambda: synthetic(12, 8, seed=11), "12 buses, spanning tree fixed, 8 switchable chords."),
    "mesh9": (lambda: synthetic(14, 9, seed=5), "14 buses, spanning tree fixed, 9 switchable chords."),
    "grid10": (lambda: synthetic(16, 10, seed=7), "16 buses, spanning tree fixed, 10 switchable chords."),
    "hard30": (lambda: synthetic(40, 30, seed=23, cap_scale=0.6), "40 buses, 30 switchable chords; too large to enumerate."),
}


def main():
    check = "--check" in sys.argv
    only = [a for a in sys.argv[1:] if not a.startswith("--")]
    for name, (make, desc) in FIXTURES.items():
        if only and name not in only:
            continue
        net = make()
        net.write(HERE / f"{name}.net", [desc, "Generated by make_fixtures.py."])
        if check and len(net.switchable()) <= 10:
            study(net, name)


if __name__ == "__main__":
    main()
