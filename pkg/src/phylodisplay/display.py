"""Switchings, display sets, and display-set decision problems.

Everything here is exhaustive enumeration with pruning, intended as ground
truth at desk scale.  A switching resolves each reticulation to one of its
two incoming edges; the chosen subgraph is a spanning tree of the network
from which the displayed tree is read off by suppressing pass-through
vertices and dropping branches that lost all their leaves.

Display sets are sets of canonical forms (strings), so duplicates arising
from distinct switchings collapse; see :func:`phylodisplay.core.canonical_form`.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .core import Digraph, LabelError, PhyloError, PhyloNetwork, PhyloTree, canonical_form

DEFAULT_RETIC_CAP = 20
_CAP_ENV = "PHYLO_RETIC_CAP"


class ReticulationBudgetError(PhyloError):
    """Raised when a network has more reticulations than the configured cap."""


def reticulation_cap(override: int | None = None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get(_CAP_ENV)
    return int(env) if env else DEFAULT_RETIC_CAP


@dataclass(frozen=True)
class Switching:
    """One selected incoming edge per reticulation."""

    chosen: tuple[tuple[int, tuple[int, int]], ...]  # (reticulation, (parent, reticulation))

    def as_dict(self) -> dict[int, tuple[int, int]]:
        return dict(self.chosen)

    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(e for _, e in self.chosen)


@dataclass(frozen=True)
class Embedding:
    """Edge subset of a host network forming a subdivision of a displayed tree."""

    edges: frozenset[tuple[int, int]]
    root: int


def _check_cap(net: PhyloNetwork, cap: int | None) -> tuple[tuple[int, ...], int]:
    retics = net.reticulations
    limit = reticulation_cap(cap)
    if len(retics) > limit:
        raise ReticulationBudgetError(
            f"reticulation budget exceeded: k={len(retics)} > cap={limit}")
    return retics, limit

def _tree_children(net: PhyloNetwork) -> dict[int, list[int]]:
    """Children reached by tree edges only (edges into reticulations removed)."""
    retic = set(net.reticulations)
    out: dict[int, list[int]] = {v: [] for v in net.vertices}
    for u, v in net.edges:
        if v not in retic:
            out[u].append(v)
    return out


def switching_count(net: PhyloNetwork) -> int:
    return 1 << len(net.reticulations)


def switching_by_index(net: PhyloNetwork, index: int) -> Switching:
    """The index-th switching in the deterministic enumeration order."""
    retics = net.reticulations
    chosen = []
    for pos, r in enumerate(retics):
        parents = net.parents(r)
        u = parents[(index >> pos) & 1]
        chosen.append((r, (u, r)))
    return Switching(tuple(chosen))


def enumerate_switchings(net: PhyloNetwork, cap: int | None = None) -> Iterator[Switching]:
    """All 2^k switchings, in a fixed order (reticulations sorted by id)."""
    retics, _ = _check_cap(net, cap)
    for index in range(1 << len(retics)):
        yield switching_by_index(net, index)


def _chosen_extra(net: PhyloNetwork, switching: Switching) -> dict[int, list[int]]:
    extra: dict[int, list[int]] = {}
    seen = set()
    for r, (u, v) in switching.chosen:
        if v != r or u not in net.parents(r):
            raise PhyloError(f"switching selects ({u},{v}) which is not an edge into {r}")
        if r in seen:
            raise PhyloError(f"switching selects two edges for reticulation {r}")
        seen.add(r)
        extra.setdefault(u, []).append(r)
    if seen != set(net.reticulations):
        raise PhyloError("switching does not cover every reticulation")
    return extra


def _canon_yield(
    net: PhyloNetwork,
    tree_children: dict[int, list[int]],
    extra: Mapping[int, list[int]],
    live: frozenset[str] | None,
) -> Optional[str]:
    """Canonical form of the switching's yield, restricted to ``live`` labels.

    ``live=None`` keeps the full leaf set.  Branches without live leaves
    evaporate; pass-through vertices are suppressed on the fly.  Returns
    None when no live leaf survives.
    """
    labels = net.leaf_labels
    forms: dict[int, Optional[str]] = {}
    stack: list[tuple[int, bool]] = [(net.root, False)]  # type: ignore[list-item]
    while stack:
        v, ready = stack.pop()
        kids = tree_children[v] + extra.get(v, []) if v in extra else tree_children[v]
        if not kids:
            if v in labels:
                lab = labels[v]
                forms[v] = lab if live is None or lab in live else None
            else:
                forms[v] = None
            continue
        if ready:
            subs = [f for f in (forms[c] for c in kids) if f is not None]
            if not subs:
                forms[v] = None
            elif len(subs) == 1:
                forms[v] = subs[0]
            else:
                subs.sort()
                forms[v] = "(" + ",".join(subs) + ")"
        else:
            stack.append((v, True))
            for c in kids:
                stack.append((c, False))
    return forms[net.root]


def yield_tree(net: PhyloNetwork, switching: Switching) -> PhyloTree:
    """The phylogenetic X-tree yielded by a switching.

    Implements the cleanup rules directly: non-selected reticulation edges
    are dropped, then pass-through vertices are suppressed, leafless branches
    deleted, and any dangling path above the surviving root removed.
    """
    if net.root is None:
        raise PhyloError("network has no unique root")
    tree_children = _tree_children(net)
    extra = _chosen_extra(net, switching)

    rep: dict[int, Optional[int]] = {}
    out_edges: dict[int, list[int]] = {}
    order: list[tuple[int, bool]] = [(net.root, False)]
    while order:
        v, ready = order.pop()
        kids = tree_children[v] + extra.get(v, [])
        if not kids:
            rep[v] = v if v in net.leaf_labels else None
            continue
        if ready:
            live = [rep[c] for c in kids if rep[c] is not None]
            if not live:
                rep[v] = None
            elif len(live) == 1:
                rep[v] = live[0]
            else:
                rep[v] = v
                out_edges[v] = live
        else:
            order.append((v, True))
            order.extend((c, False) for c in kids)

    top = rep[net.root]
    if top is None:
        raise PhyloError("switching yields an empty graph")
    edges = [(u, w) for u, ws in out_edges.items() for w in ws]
    labels = dict(net.leaf_labels)
    tree = PhyloNetwork(edges, labels, block=len(labels) == 1)
    return tree


def display_set(net: PhyloNetwork, cap: int | None = None, jobs: int = 1) -> frozenset[str]:
    """Canonical forms of all trees displayed on the full leaf set."""
    retics, _ = _check_cap(net, cap)
    total = 1 << len(retics)
    if jobs <= 1 or total < 256:
        return frozenset(_display_chunk((net, 0, total)))
    bounds = [total * i // jobs for i in range(jobs + 1)]
    chunks = [(net, bounds[i], bounds[i + 1]) for i in range(jobs)]
    acc: set[str] = set()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_display_chunk, chunks):
            acc |= part
    return frozenset(acc)


def _display_chunk(args: tuple[PhyloNetwork, int, int]) -> set[str]:
    net, start, end = args
    tree_children = _tree_children(net)
    out: set[str] = set()
    for index in range(start, end):
        extra = _chosen_extra(net, switching_by_index(net, index))
        form = _canon_yield(net, tree_children, extra, None)
        if form is not None:
            out.add(form)
    return out


def _tree_for_canon(net: PhyloNetwork, canon: str, cap: int | None = None) -> PhyloTree:
    tree_children = _tree_children(net)
    for switching in enumerate_switchings(net, cap):
        extra = _chosen_extra(net, switching)
        if _canon_yield(net, tree_children, extra, None) == canon:
            return yield_tree(net, switching)
    raise PhyloError(f"no switching yields {canon!r}")


def displays(net: PhyloNetwork, tree: PhyloTree, cap: int | None = None) -> Optional[Embedding]:
    """Embedding of ``tree`` in ``net`` if displayed, else None.

    The query tree may live on a subset Y of the network's leaf set: a
    switching's yield restricted to Y must equal the query.  The returned
    embedding's root has in-degree zero and out-degree two inside the
    embedding (single-leaf queries give a degenerate empty-edge embedding).
    """
    want = tree.labels
    missing = want - net.labels
    if missing:
        raise LabelError(f"query labels not in network: {sorted(missing)}")
    if len(want) == 1:
        (label,) = want
        return Embedding(frozenset(), net.leaf_with_label(label))

    target = canonical_form(tree)
    live = frozenset(want)
    tree_children = _tree_children(net)
    for switching in enumerate_switchings(net, cap):
        extra = _chosen_extra(net, switching)
        if _canon_yield(net, tree_children, extra, live) == target:
            return _embedding_from_switching(net, switching, live)
    return None


def _embedding_from_switching(
    net: PhyloNetwork, switching: Switching, live: frozenset[str]
) -> Embedding:
    # In the chosen subgraph every non-root vertex has a unique parent; the
    # embedding is the union of leaf-to-root paths, trimmed above the fork.
    chosen = switching.as_dict()
    retic = set(net.reticulations)
    parent_of: dict[int, int] = {}
    for u, v in net.edges:
        if v in retic:
            continue
        parent_of[v] = u
    for r, (u, _) in chosen.items():
        parent_of[r] = u

    marked: set[tuple[int, int]] = set()
    out_count: dict[int, int] = {}
    for label in live:
        v = net.leaf_with_label(label)
        while v in parent_of:
            u = parent_of[v]
            if (u, v) in marked:
                break
            marked.add((u, v))
            out_count[u] = out_count.get(u, 0) + 1
            v = u

    root = net.root
    while out_count.get(root, 0) == 1:
        (child,) = [v for (u, v) in marked if u == root]
        marked.discard((root, child))
        root = child
    return Embedding(frozenset(marked), root)


def embedding_to_tree(net: PhyloNetwork, emb: Embedding) -> PhyloTree:
    """Suppress the embedding's pass-through vertices; used to verify embeddings."""
    g = Digraph()
    verts = {emb.root}
    for u, v in emb.edges:
        verts.add(u)
        verts.add(v)
    for v in verts:
        g.ensure_vertex(v)
    for u, v in sorted(emb.edges):
        g.add_edge(u, v)
    for v in verts:
        if v in net.leaf_labels and not g.children[v]:
            g.labels[v] = net.leaf_labels[v]
    for v in list(g.children):
        if len(g.parents[v]) == 1 and len(g.children[v]) == 1:
            g.suppress_vertex(v)
    return g.freeze(block=len(verts) == 1)


def _least(canons: set[str] | frozenset[str]) -> str:
    return min(canons)


def common_tree(
    net1: PhyloNetwork, net2: PhyloNetwork, cap: int | None = None, jobs: int = 1
) -> Optional[PhyloTree]:
    """Some tree displayed by both networks, or None.

    Reported tree is the lexicographically least common canonical form, so
    the choice is reproducible.
    """
    _require_same_labels(net1, net2)
    set1 = display_set(net1, cap, jobs)
    tree_children = _tree_children(net2)
    common: set[str] = set()
    for switching in enumerate_switchings(net2, cap):
        extra = _chosen_extra(net2, switching)
        form = _canon_yield(net2, tree_children, extra, None)
        if form in set1:
            common.add(form)
    if not common:
        return None
    return _tree_for_canon(net1, _least(common), cap)


def display_subset(
    net1: PhyloNetwork, net2: PhyloNetwork, cap: int | None = None, jobs: int = 1
) -> Optional[PhyloTree]:
    """None if T(net1) is a subset of T(net2); else a counterexample tree.

    The counterexample (displayed by net1 only) is the least canonical form.
    """
    _require_same_labels(net1, net2)
    only = display_set(net1, cap, jobs) - display_set(net2, cap, jobs)
    if not only:
        return None
    return _tree_for_canon(net1, _least(only), cap)


def display_equivalence(
    net1: PhyloNetwork, net2: PhyloNetwork, cap: int | None = None, jobs: int = 1
) -> Optional[tuple[str, PhyloTree]]:
    """None if display sets are equal, else (side, counterexample).

    ``side`` is "left-only" or "right-only" and names the network whose
    display set contains the counterexample.
    """
    _require_same_labels(net1, net2)
    set1 = display_set(net1, cap, jobs)
    set2 = display_set(net2, cap, jobs)
    left = set1 - set2
    right = set2 - set1
    if not left and not right:
        return None
    if left and (not right or _least(left) <= _least(right)):
        return "left-only", _tree_for_canon(net1, _least(left), cap)
    return "right-only", _tree_for_canon(net2, _least(right), cap)


def count_common(
    net1: PhyloNetwork, net2: PhyloNetwork, cap: int | None = None, jobs: int = 1
) -> int:
    """|T(net1) ∩ T(net2)| by enumeration."""
    _require_same_labels(net1, net2)
    return len(display_set(net1, cap, jobs) & display_set(net2, cap, jobs))


def _require_same_labels(net1: PhyloNetwork, net2: PhyloNetwork) -> None:
    if net1.labels != net2.labels:
        raise LabelError(
            f"leaf-set mismatch: {sorted(net1.labels ^ net2.labels)} not shared")


# -- base trees ------------------------------------------------------------

def is_base_tree_switching(net: PhyloNetwork, switching: Switching) -> bool:
    """True iff every vertex whose children are all reticulations keeps an edge.

    Such a switching deletes reticulation edges only (no vertex is orphaned),
    so its yield is a base tree of the network.
    """
    retic = set(net.reticulations)
    kept_parents = {u for u, _ in (e for _, e in switching.chosen)}
    for v in net.vertices:
        kids = net.children(v)
        if kids and all(c in retic for c in kids):
            if v not in kept_parents:
                return False
    return True


def is_tree_based(net: PhyloNetwork, cap: int | None = None) -> bool:
    return any(is_base_tree_switching(net, s) for s in enumerate_switchings(net, cap))


def base_tree_set(net: PhyloNetwork, cap: int | None = None) -> frozenset[str]:
    """Canonical forms of all base trees (yields of base-tree switchings)."""
    tree_children = _tree_children(net)
    out: set[str] = set()
    for switching in enumerate_switchings(net, cap):
        if not is_base_tree_switching(net, switching):
            continue
        extra = _chosen_extra(net, switching)
        form = _canon_yield(net, tree_children, extra, None)
        if form is not None:
            out.add(form)
    return frozenset(out)


def common_base_tree(
    net1: PhyloNetwork, net2: PhyloNetwork, cap: int | None = None
) -> Optional[PhyloTree]:
    """A tree that is a base tree of both networks, or None.

    Raises on inputs that are not tree-based.
    """
    _require_same_labels(net1, net2)
    set1 = base_tree_set(net1, cap)
    set2 = base_tree_set(net2, cap)
    if not set1 or not set2:
        raise PhyloError("common_base_tree requires tree-based inputs")
    common = set1 & set2
    if not common:
        return None
    return _tree_for_canon(net1, _least(common), cap)
