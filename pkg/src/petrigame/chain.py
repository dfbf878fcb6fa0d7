"""Exact long-run analysis of finite Markov chains over ``Fraction``.

Chains are sparse: ``P[x]`` maps successor indices to probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import networkx as nx

SparseChain = Sequence[dict[int, Fraction]]


def solve(A: list[list[Fraction]], B: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve ``A X = B`` exactly by Gauss-Jordan elimination (``A`` nonsingular)."""
    n = len(A)
    k = len(B[0]) if B else 0
    M = [list(A[i]) + list(B[i]) for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[col], M[piv] = M[piv], M[col]
        row = M[col]
        inv = 1 / row[col]
        if inv != 1:
            row[:] = [v * inv for v in row]
        nz = [j for j in range(col, n + k) if row[j] != 0]
        for r in range(n):
            if r != col:
                f = M[r][col]
                if f != 0:
                    target = M[r]
                    for j in nz:
                        target[j] -= f * row[j]
    return [M[i][n:] for i in range(n)]


def support_graph(P: SparseChain) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(P)))
    for x, row in enumerate(P):
        g.add_edges_from((x, y) for y, p in row.items() if p > 0)
    return g


@dataclass
class ChainAnalysis:
    classes: list[list[int]]  # closed communicating classes
    stationary: list[dict[int, Fraction]]  # per class
    class_of: dict[int, int]
    transient: list[int]
    absorption: dict[int, list[Fraction]]  # transient state -> probability per class

    def limit_row(self, x: int) -> dict[int, Fraction]:
        """Row ``x`` of the Cesàro limit matrix."""
        if x in self.class_of:
            return dict(self.stationary[self.class_of[x]])
        row: dict[int, Fraction] = {}
        for c, a in enumerate(self.absorption[x]):
            if a:
                for y, pi in self.stationary[c].items():
                    row[y] = a * pi
        return row


def analyze_chain(P: SparseChain) -> ChainAnalysis:
    g = support_graph(P)
    cond = nx.condensation(g)
    classes = sorted(
        (sorted(cond.nodes[c]["members"]) for c in cond.nodes if cond.out_degree(c) == 0),
        key=lambda c: c[0],
    )
    class_of = {x: i for i, c in enumerate(classes) for x in c}
    stationary = []
    for members in classes:
        pos = {x: i for i, x in enumerate(members)}
        n = len(members)
        # pi (I - P) = 0 with the last balance equation replaced by sum(pi) = 1
        A = [[Fraction(0)] * n for _ in range(n)]
        for x in members:
            i = pos[x]
            A[i][i] += 1
            for y, p in P[x].items():
                A[pos[y]][i] -= p
        A[n - 1] = [Fraction(1)] * n
        b = [[Fraction(0)] for _ in range(n)]
        b[n - 1][0] = Fraction(1)
        pi = solve(A, b)
        stationary.append({x: pi[pos[x]][0] for x in members})
    transient = [x for x in range(len(P)) if x not in class_of]
    absorption: dict[int, list[Fraction]] = {}
    if transient:
        tpos = {x: i for i, x in enumerate(transient)}
        n = len(transient)
        A = [[Fraction(0)] * n for _ in range(n)]
        B = [[Fraction(0)] * len(classes) for _ in range(n)]
        for x in transient:
            i = tpos[x]
            A[i][i] += 1
            for y, p in P[x].items():
                if y in tpos:
                    A[i][tpos[y]] -= p
                else:
                    B[i][class_of[y]] += p
        X = solve(A, B)
        absorption = {x: X[tpos[x]] for x in transient}
    return ChainAnalysis(classes, stationary, class_of, transient, absorption)


def gains(P: SparseChain, rewards: Sequence[Sequence[Fraction]], info: ChainAnalysis | None = None):
    """Long-run average reward vector of every start state."""
    if info is None:
        info = analyze_chain(P)
    dims = len(rewards[0]) if rewards else 0
    class_gain = []
    for pi in info.stationary:
        class_gain.append(
            [sum((p * rewards[x][d] for x, p in pi.items()), Fraction(0)) for d in range(dims)]
        )
    out = []
    for x in range(len(P)):
        if x in info.class_of:
            out.append(list(class_gain[info.class_of[x]]))
        else:
            a = info.absorption[x]
            out.append(
                [sum((a[c] * class_gain[c][d] for c in range(len(a))), Fraction(0)) for d in range(dims)]
            )
    return out


def gain_and_bias(P: SparseChain, r: Sequence[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    """Gain ``g`` and bias ``h`` of a scalar-reward chain.

    ``h`` solves ``g + (I - P) h = r`` and is normalised by ``P* h = 0``.
    """
    info = analyze_chain(P)
    g = [v[0] for v in gains(P, [[x] for x in r], info)]
    n = len(P)
    h = [Fraction(0)] * n
    for members in info.classes:
        if len(members) == 1:
            continue
        pos = {x: i for i, x in enumerate(members)}
        m = len(members)
        A = [[Fraction(0)] * m for _ in range(m)]
        b = [[r[x] - g[x]] for x in members]
        for x in members:
            i = pos[x]
            A[i][i] += 1
            for y, p in P[x].items():
                A[i][pos[y]] -= p
        # pin the reference state to zero instead of its (redundant) equation
        A[0] = [Fraction(1)] + [Fraction(0)] * (m - 1)
        b[0] = [Fraction(0)]
        sol = solve(A, b)
        for x in members:
            h[x] = sol[pos[x]][0]
    if info.transient:
        tpos = {x: i for i, x in enumerate(info.transient)}
        m = len(info.transient)
        A = [[Fraction(0)] * m for _ in range(m)]
        b = [[r[x] - g[x]] for x in info.transient]
        for x in info.transient:
            i = tpos[x]
            A[i][i] += 1
            for y, p in P[x].items():
                if y in tpos:
                    A[i][tpos[y]] -= p
                else:
                    b[i][0] += p * h[y]
        sol = solve(A, b)
        for x in info.transient:
            h[x] = sol[tpos[x]][0]
    bias = []
    for x in range(n):
        shift = sum((p * h[y] for y, p in info.limit_row(x).items()), Fraction(0))
        bias.append(h[x] - shift)
    return g, bias
