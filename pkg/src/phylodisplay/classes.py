"""Membership tests for network classes and structural predicates.

Covers shortcuts, visibility, tree-child / normal / reticulation-visible /
temporal recognition, tree-basedness, and the two predicates needed by the
quantified-paths machinery (caterpillar-inducing, two-path property).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import PhyloError, PhyloNetwork
from .display import is_tree_based, reticulation_cap


def find_shortcuts(net: PhyloNetwork) -> frozenset[tuple[int, int]]:
    """Edges (u,v) for which another directed u-to-v path exists."""
    out = set()
    for u, v in net.edges:
        if _reaches_avoiding_edge(net, u, v):
            out.add((u, v))
    return frozenset(out)


def _reaches_avoiding_edge(net: PhyloNetwork, src: int, dst: int) -> bool:
    skipped = False
    stack = [src]
    seen = {src}
    while stack:
        x = stack.pop()
        for y in net.children(x):
            if x == src and y == dst and not skipped:
                skipped = True  # edge occurs once; networks have no parallel edges
                continue
            if y == dst:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def visible_vertices(net: PhyloNetwork) -> frozenset[int]:
    """Vertices v such that some leaf is unreachable from the root without v."""
    if net.root is None:
        raise PhyloError("network has no unique root")
    leaves = set(net.leaves)
    out = set()
    for v in net.vertices:
        if v == net.root:
            out.add(v)
            continue
        reached = {net.root}
        stack = [net.root]
        while stack:
            x = stack.pop()
            for y in net.children(x):
                if y != v and y not in reached:
                    reached.add(y)
                    stack.append(y)
        if any(leaf not in reached for leaf in leaves if leaf != v) or v in leaves:
            out.add(v)
    return frozenset(out)


def is_tree_child(net: PhyloNetwork) -> bool:
    """Every non-leaf vertex has a child that is a leaf or a tree vertex."""
    retic = set(net.reticulations)
    for v in net.vertices:
        kids = net.children(v)
        if kids and all(c in retic for c in kids):
            return False
    return True


def is_reticulation_visible(net: PhyloNetwork) -> bool:
    visible = visible_vertices(net)
    return all(r in visible for r in net.reticulations)


def temporal_labeling(net: PhyloNetwork) -> Optional[dict[int, int]]:
    """A temporal labeling as positive integers, or None if none exists.

    Endpoints of every reticulation edge must share a time stamp, so merge
    them into classes; a labeling exists iff no tree edge stays inside a
    class and the quotient graph under tree edges is acyclic.  Ranks by
    longest path then give stamps increasing along every tree edge.
    """
    parent = {v: v for v in net.vertices}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    retic = set(net.reticulations)
    for u, v in net.edges:
        if v in retic:
            union(u, v)

    class_edges: set[tuple[int, int]] = set()
    for u, v in net.edges:
        if v in retic:
            continue
        cu, cv = find(u), find(v)
        if cu == cv:
            return None
        class_edges.add((cu, cv))

    classes = {find(v) for v in net.vertices}
    succ: dict[int, list[int]] = {c: [] for c in classes}
    indeg = {c: 0 for c in classes}
    for cu, cv in class_edges:
        succ[cu].append(cv)
        indeg[cv] += 1

    rank: dict[int, int] = {}
    queue = [c for c in classes if indeg[c] == 0]
    for c in queue:
        rank[c] = 1
    while queue:
        c = queue.pop()
        for d in succ[c]:
            rank[d] = max(rank.get(d, 1), rank[c] + 1)
            indeg[d] -= 1
            if indeg[d] == 0:
                queue.append(d)
    if len(rank) != len(classes):
        return None  # quotient graph is cyclic
    return {v: rank[find(v)] for v in net.vertices}


def check_temporal_labeling(net: PhyloNetwork, t: dict[int, int]) -> bool:
    """Both defining conditions, edge by edge."""
    retic = set(net.reticulations)
    for u, v in net.edges:
        if v in retic:
            if t[u] != t[v]:
                return False
        elif not t[u] < t[v]:
            return False
    return all(t[v] > 0 for v in net.vertices)


@dataclass
class ClassReport:
    tree_child: bool
    normal: bool
    reticulation_visible: bool
    temporal: Optional[dict[int, int]]
    shortcuts: frozenset[tuple[int, int]]
    tree_based: Optional[bool]  # None when the reticulation cap was exceeded


def classify(net: PhyloNetwork, with_tree_based: bool = True,
             cap: int | None = None) -> ClassReport:
    """Flags per the class definitions.

    ``tree_based`` is decided by enumerating base-tree switchings and is
    reported as None when the network exceeds the reticulation cap.
    """
    tc = is_tree_child(net)
    if __debug__ and len(net.vertices) <= 200:
        # Known equivalence: tree-child iff every vertex is visible.
        assert tc == (visible_vertices(net) == frozenset(net.vertices))
    shortcuts = find_shortcuts(net)
    temporal = temporal_labeling(net)
    if temporal is not None:
        assert check_temporal_labeling(net, temporal)
        assert not shortcuts  # a shortcut contradicts any temporal labeling
    tree_based: Optional[bool] = None
    if with_tree_based and len(net.reticulations) <= reticulation_cap(cap):
        tree_based = is_tree_based(net, cap)
    return ClassReport(
        tree_child=tc,
        normal=tc and not shortcuts,
        reticulation_visible=is_reticulation_visible(net),
        temporal=temporal,
        shortcuts=shortcuts,
        tree_based=tree_based,
    )


def is_temporal(net: PhyloNetwork) -> bool:
    return temporal_labeling(net) is not None


def is_normal(net: PhyloNetwork) -> bool:
    return is_tree_child(net) and not find_shortcuts(net)


# -- predicates for the quantified-paths instances --------------------------

def is_caterpillar_inducing(net: PhyloNetwork, sources: Iterable[int]) -> bool:
    """True iff deleting everything below the sources leaves a caterpillar shape.

    Deletes each vertex lying on a directed path from a child of a source to
    a leaf (in a network that is exactly the set of vertices reachable from
    the sources' children); the remainder must be a caterpillar after
    ignoring leaf labels.
    """
    src = set(sources)
    leaves = set(net.leaves)
    if src & leaves:
        raise PhyloError("source set must not contain leaves")
    doomed: set[int] = set()
    stack = [c for s in src for c in net.children(s)]
    while stack:
        v = stack.pop()
        if v in doomed:
            continue
        doomed.add(v)
        stack.extend(net.children(v))

    remaining = [v for v in net.vertices if v not in doomed]
    if len(remaining) < 3:
        return False
    kids = {v: [c for c in net.children(v) if c not in doomed] for v in remaining}
    indeg = {v: 0 for v in remaining}
    for v in remaining:
        for c in kids[v]:
            indeg[c] += 1

    roots = [v for v in remaining if indeg[v] == 0]
    if len(roots) != 1 or any(indeg[v] > 1 for v in remaining):
        return False
    internal = [v for v in remaining if kids[v]]
    n_leaves = len(remaining) - len(internal)
    if n_leaves < 2:
        return False
    for v in internal:
        if len(kids[v]) != 2:
            return False
        if sum(1 for c in kids[v] if kids[c]) > 1:
            return False  # internal vertices must form a single path
    return True


@dataclass
class TwoPathCertificate:
    """For each universal index i, the two s_i-to-t_i paths as vertex tuples."""

    pairs: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]


def check_two_path_property(
    net: PhyloNetwork,
    pairs: Sequence[tuple[int, int]],
    p: int,
    path_limit: int = 64,
) -> Optional[TwoPathCertificate]:
    """Certificate for the two-path property relative to p, or None.

    For each i <= p there must be exactly two directed s_i-to-t_i paths,
    sharing only s_i, t_i, the parent of t_i and the edge into t_i; paths of
    different indices must be fully vertex-disjoint.
    """
    from .paths import enumerate_st_paths

    if not 1 <= p <= len(pairs):
        raise PhyloError(f"universal prefix p={p} out of range")
    vset = set(net.vertices)
    for s, t in pairs[:p]:
        if s not in vset or t not in vset:
            raise PhyloError(f"pair ({s},{t}) references unknown vertices")

    cert: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for s, t in pairs[:p]:
        found = enumerate_st_paths(net, s, t, limit=path_limit)
        if len(found) != 2:
            return None
        parents_t = net.parents(t)
        if len(parents_t) != 1:
            return None
        fork_order = {c: i for i, c in enumerate(net.children(s))}
        a, b = sorted(found, key=lambda path: fork_order.get(path[1], len(fork_order)))
        shared_vertices = set(a) & set(b)
        if shared_vertices != {s, t, parents_t[0]}:
            return None
        edges_a = set(zip(a, a[1:]))
        edges_b = set(zip(b, b[1:]))
        if edges_a & edges_b != {(parents_t[0], t)}:
            return None
        cert.append((tuple(a), tuple(b)))

    for i in range(len(cert)):
        vi = set(cert[i][0]) | set(cert[i][1])
        for j in range(i + 1, len(cert)):
            vj = set(cert[j][0]) | set(cert[j][1])
            if vi & vj:
                return None
    return TwoPathCertificate(tuple(cert))
