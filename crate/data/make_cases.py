"""Writes case14.m and case118.m with their sidecar annotations.

Tables come from the public IEEE test cases as distributed with PYPOWER
(`pip install pypower`). case14 ratings are replaced by the tighter values in
CASE14_RATINGS so that switching matters; the stock file rates every branch
at 9900 MW. In both cases the fixed lines form a maximum-susceptance
spanning tree and the remaining branches are switchable.

    python3 data/make_cases.py
"""

from pathlib import Path

import networkx as nx
from pypower.case14 import case14
from pypower.case118 import case118

HERE = Path(__file__).resolve().parent

CASE14_RATINGS = [90, 60, 70, 55, 45, 40, 60, 60, 35, 70, 30, 30, 40, 40, 45, 35, 30, 25, 25, 25]


def fmt_row(row):
    return "\t" + "\t".join(f"{v:g}" for v in row) + ";"


def write_case(name, case, note):
    out = [f"function mpc = {name}", f"% {note}", "mpc.version = '2';", f"mpc.baseMVA = {case['baseMVA']:g};", ""]
    for table in ("bus", "gen", "branch", "gencost"):
        out.append(f"%% {table} data")
        out.append(f"mpc.{table} = [")
        out.extend(fmt_row(r) for r in case[table])
        out.append("];")
        out.append("")
    (HERE / f"{name}.m").write_text("\n".join(out))


def write_sidecar(name, case):
    g = nx.MultiGraph()
    for i, r in enumerate(case["branch"]):
        g.add_edge(int(r[0]), int(r[1]), key=i, weight=1.0 / r[3])
    tree = nx.maximum_spanning_tree(g, weight="weight")
    fixed = {k for _, _, k in tree.edges(keys=True)}
    slack = next(int(r[0]) for r in case["bus"] if r[1] == 3)
    lines = [f"# {len(case['branch']) - len(fixed)} switchable branches; the rest form a spanning tree.", f"slack {slack}"]
    lines += [f"switchable {i + 1}" for i in range(len(case["branch"])) if i not in fixed]
    (HERE / f"{name}.switch").write_text("\n".join(lines) + "\n")


def main():
    c14 = case14()
    c14["branch"][:, 5] = CASE14_RATINGS
    write_case("case14", c14, "IEEE 14-bus case with long-term ratings tightened for switching studies.")
    write_sidecar("case14", c14)
    c118 = case118()
    write_case("case118", c118, "IEEE 118-bus case.")
    write_sidecar("case118", c118)


if __name__ == "__main__":
    main()
