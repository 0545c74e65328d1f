"""Rooted binary phylogenetic networks: graph model and tree utilities.

Vertices are non-negative integers.  A network is immutable after
construction; all mutation happens on :class:`Digraph` builders which are
frozen into :class:`PhyloNetwork` objects.  Phylogenetic trees are networks
without reticulations (``PhyloTree`` is an alias).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence


class PhyloError(Exception):
    """Base error for this package."""


class LabelError(PhyloError):
    """Unknown, missing or duplicated leaf label."""


class Digraph:
    """Mutable directed multigraph builder with leaf labels.

    Used by parsers and reduction constructions to assemble graphs before
    freezing them into immutable networks.  No invariants are enforced here.
    """

    def __init__(self) -> None:
        self._next = 0
        self.children: dict[int, list[int]] = {}
        self.parents: dict[int, list[int]] = {}
        self.labels: dict[int, str] = {}
        self.annotations: dict[int, str] = {}

    def new_vertex(self, label: str | None = None, note: str | None = None) -> int:
        v = self._next
        self._next += 1
        self.children[v] = []
        self.parents[v] = []
        if label is not None:
            self.labels[v] = label
        if note is not None:
            self.annotations[v] = note
        return v

    def ensure_vertex(self, v: int) -> int:
        if v not in self.children:
            self.children[v] = []
            self.parents[v] = []
            self._next = max(self._next, v + 1)
        return v

    def add_edge(self, u: int, v: int) -> None:
        self.ensure_vertex(u)
        self.ensure_vertex(v)
        self.children[u].append(v)
        self.parents[v].append(u)

    def remove_edge(self, u: int, v: int) -> None:
        self.children[u].remove(v)
        self.parents[v].remove(u)

    def delete_vertex(self, v: int) -> None:
        for u in list(self.parents[v]):
            self.remove_edge(u, v)
        for w in list(self.children[v]):
            self.remove_edge(v, w)
        del self.children[v]
        del self.parents[v]
        self.labels.pop(v, None)
        self.annotations.pop(v, None)

    def subdivide_edge(self, u: int, v: int, note: str | None = None) -> int:
        """Replace edge (u, v) by (u, w), (w, v) and return w."""
        w = self.new_vertex(note=note)
        self.remove_edge(u, v)
        self.add_edge(u, w)
        self.add_edge(w, v)
        return w

    def suppress_vertex(self, v: int) -> None:
        """Splice out a vertex with in-degree one and out-degree one."""
        (u,) = self.parents[v]
        (w,) = self.children[v]
        self.remove_edge(u, v)
        self.remove_edge(v, w)
        self.add_edge(u, w)
        self.delete_vertex(v)

    def vertices(self) -> list[int]:
        return sorted(self.children)

    def edge_list(self) -> list[tuple[int, int]]:
        return [(u, v) for u in sorted(self.children) for v in self.children[u]]

    def copy(self) -> "Digraph":
        g = Digraph()
        g._next = self._next
        g.children = {v: list(cs) for v, cs in self.children.items()}
        g.parents = {v: list(ps) for v, ps in self.parents.items()}
        g.labels = dict(self.labels)
        g.annotations = dict(self.annotations)
        return g

    def freeze(self, block: bool = False) -> "PhyloNetwork":
        return PhyloNetwork(self.edge_list(), self.labels, annotations=self.annotations, block=block)


class PhyloNetwork:
    """Rooted binary leaf-labeled DAG (immutable after construction).

    ``edges`` is an ordered list of (parent, child) pairs; child order within
    a vertex follows edge order.  ``leaf_labels`` maps out-degree-zero
    vertices to label strings.  Construction is permissive: structural
    invariants are checked by :func:`validate`, not here.

    ``block=True`` marks degenerate single-leaf networks that are only legal
    as caterpillar-decomposition blocks.
    """

    __slots__ = ("edges", "leaf_labels", "annotations", "block", "root",
                 "_children", "_parents", "_vertices", "_label_to_leaf")

    def __init__(
        self,
        edges: Iterable[tuple[int, int]],
        leaf_labels: Mapping[int, str],
        annotations: Mapping[int, str] | None = None,
        block: bool = False,
    ) -> None:
        self.edges: tuple[tuple[int, int], ...] = tuple((int(u), int(v)) for u, v in edges)
        self.leaf_labels: dict[int, str] = {int(v): str(s) for v, s in leaf_labels.items()}
        self.annotations: dict[int, str] = dict(annotations or {})
        self.block = block

        children: dict[int, list[int]] = {}
        parents: dict[int, list[int]] = {}
        verts: set[int] = set(self.leaf_labels)
        for u, v in self.edges:
            verts.add(u)
            verts.add(v)
        for v in verts:
            children[v] = []
            parents[v] = []
        for u, v in self.edges:
            children[u].append(v)
            parents[v].append(u)
        self._children = {v: tuple(cs) for v, cs in children.items()}
        self._parents = {v: tuple(ps) for v, ps in parents.items()}
        self._vertices = tuple(sorted(verts))

        roots = [v for v in self._vertices if not self._parents[v]]
        self.root: Optional[int] = roots[0] if len(roots) == 1 else None
        self._label_to_leaf = {s: v for v, s in self.leaf_labels.items()}

    # -- structure queries ------------------------------------------------

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    def parents(self, v: int) -> tuple[int, ...]:
        return self._parents[v]

    def in_degree(self, v: int) -> int:
        return len(self._parents[v])

    def out_degree(self, v: int) -> int:
        return len(self._children[v])

    def is_leaf(self, v: int) -> bool:
        return not self._children[v]

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self._vertices if not self._children[v])

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(self.leaf_labels.values())

    def leaf_with_label(self, label: str) -> int:
        try:
            return self._label_to_leaf[label]
        except KeyError:
            raise LabelError(f"unknown label {label!r}") from None

    @property
    def reticulations(self) -> tuple[int, ...]:
        return tuple(v for v in self._vertices if len(self._parents[v]) >= 2)

    @property
    def tree_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self._vertices
                     if len(self._parents[v]) <= 1 and self._children[v])

    def is_tree(self) -> bool:
        return not self.reticulations

    def reachable_from(self, v: int) -> set[int]:
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in self._children[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def topological_order(self) -> list[int]:
        """Parents before children; raises PhyloError on a cycle."""
        indeg = {v: len(self._parents[v]) for v in self._vertices}
        queue = deque(v for v in self._vertices if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in self._children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        if len(order) != len(self._vertices):
            raise PhyloError("graph contains a directed cycle")
        return order

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except PhyloError:
            return False

    # -- derived networks --------------------------------------------------

    def to_digraph(self) -> Digraph:
        g = Digraph()
        for v in self._vertices:
            g.ensure_vertex(v)
        for u, v in self.edges:
            g.add_edge(u, v)
        g.labels = dict(self.leaf_labels)
        g.annotations = dict(self.annotations)
        g._next = max(self._vertices) + 1 if self._vertices else 0
        return g

    def relabel(self, mapping: Mapping[str, str]) -> "PhyloNetwork":
        """Rename leaf labels; labels absent from the mapping are kept."""
        new = {v: mapping.get(s, s) for v, s in self.leaf_labels.items()}
        if len(set(new.values())) != len(new):
            raise LabelError("relabeling collapses two leaf labels")
        return PhyloNetwork(self.edges, new, annotations=self.annotations, block=self.block)

    def subnetwork(self, root: int, block: bool | None = None) -> "PhyloNetwork":
        """Induced subgraph on the vertices reachable from ``root``."""
        keep = self.reachable_from(root)
        edges = [(u, v) for u, v in self.edges if u in keep and v in keep]
        labels = {v: s for v, s in self.leaf_labels.items() if v in keep}
        if block is None:
            block = len(keep) == 1
        notes = {v: s for v, s in self.annotations.items() if v in keep}
        return PhyloNetwork(edges, labels, annotations=notes, block=block)

    def __repr__(self) -> str:
        return (f"PhyloNetwork(|V|={len(self._vertices)}, |E|={len(self.edges)}, "
                f"leaves={len(self.leaf_labels)}, k={len(self.reticulations)})")


#: Networks without reticulations; same representation.
PhyloTree = PhyloNetwork


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate(net: PhyloNetwork) -> ValidationReport:
    """Check the phylogenetic-network invariants; violations are data.

    Degenerate single-leaf graphs are accepted only when flagged as
    decomposition blocks.
    """
    v_list: list[str] = []
    verts = net.vertices
    if not verts:
        return ValidationReport(False, ["empty: no vertices"])

    if len(verts) == 1:
        v = verts[0]
        if v not in net.leaf_labels:
            v_list.append(f"leaf {v}: missing label")
        if not net.block:
            v_list.append("degenerate: single-leaf network is only legal as a block")
        return ValidationReport(not v_list, v_list)

    seen_edges = set()
    for u, v in net.edges:
        if (u, v) in seen_edges:
            v_list.append(f"parallel edge ({u},{v})")
        seen_edges.add((u, v))

    roots = [v for v in verts if net.in_degree(v) == 0]
    if len(roots) != 1:
        v_list.append(f"root: expected exactly one in-degree-0 vertex, found {sorted(roots)}")
    else:
        r = roots[0]
        if net.out_degree(r) != 2:
            v_list.append(f"root {r}: out-degree {net.out_degree(r)}, expected 2")

    if not net.is_acyclic():
        v_list.append("cyclic: graph contains a directed cycle")

    for v in verts:
        din, dout = net.in_degree(v), net.out_degree(v)
        if din == 0:
            continue  # covered by the root check
        if dout == 0:
            if din != 1:
                v_list.append(f"degree: leaf {v} has in-degree {din}, expected 1")
            if v not in net.leaf_labels:
                v_list.append(f"leaf {v}: missing label")
        elif (din, dout) not in ((1, 2), (2, 1)):
            v_list.append(f"degree: vertex {v} has (in,out)=({din},{dout})")

    for v, s in net.leaf_labels.items():
        if net.out_degree(v) != 0:
            v_list.append(f"label {s!r} on non-leaf vertex {v}")
    labels = list(net.leaf_labels.values())
    if len(set(labels)) != len(labels):
        dupes = sorted({s for s in labels if labels.count(s) > 1})
        v_list.append(f"labels not injective: {dupes}")

    return ValidationReport(not v_list, v_list)


def suppress_elementary(g: Digraph) -> Digraph:
    """Splice out every vertex with in-degree one and out-degree one.

    The result is order-independent: suppression of disjoint vertices
    commutes, and chains collapse to a single edge either way.
    """
    out = g.copy()
    work = [v for v in out.vertices()
            if len(out.parents[v]) == 1 and len(out.children[v]) == 1]
    for v in work:
        if v in out.children and len(out.parents[v]) == 1 and len(out.children[v]) == 1:
            out.suppress_vertex(v)
    return out


def _tree_children_map(tree: PhyloTree) -> dict[int, tuple[int, ...]]:
    if not tree.is_tree():
        raise PhyloError("operation defined on trees only")
    return {v: tree.children(v) for v in tree.vertices}


def restrict(tree: PhyloTree, labels: Iterable[str]) -> PhyloTree:
    """Restriction T|Y: minimal rooted subtree connecting Y, suppressed.

    Y must be a non-empty subset of the leaf set.  A single-label
    restriction yields the degenerate one-leaf tree (flagged as a block).
    """
    want = set(labels)
    if not want:
        raise LabelError("empty restriction")
    missing = want - set(tree.leaf_labels.values())
    if missing:
        raise LabelError(f"unknown label(s): {sorted(missing)}")
    if not tree.is_tree():
        raise PhyloError("restrict is defined on trees")

    if len(want) == 1:
        (label,) = want
        leaf = tree.leaf_with_label(label)
        return PhyloNetwork((), {leaf: label}, block=True)

    # Walk up from each wanted leaf; kept vertices span the minimal subtree
    # plus the chain up to the global root, removed below.
    kept: set[int] = set()
    for label in want:
        v = tree.leaf_with_label(label)
        while v is not None and v not in kept:
            kept.add(v)
            ps = tree.parents(v)
            v = ps[0] if ps else None

    g = Digraph()
    for v in kept:
        g.ensure_vertex(v)
    for u, v in tree.edges:
        if u in kept and v in kept:
            g.add_edge(u, v)
    for v in kept:
        if v in tree.leaf_labels and tree.leaf_labels[v] in want:
            g.labels[v] = tree.leaf_labels[v]

    # Trim the root chain above the LCA of Y, then suppress pass-throughs.
    changed = True
    while changed:
        changed = False
        for v in list(g.children):
            if not g.parents[v] and len(g.children[v]) == 1:
                g.delete_vertex(v)
                changed = True
    for v in list(g.children):
        if len(g.parents[v]) == 1 and len(g.children[v]) == 1:
            g.suppress_vertex(v)
    return g.freeze()


def canonical_form(tree: PhyloTree) -> str:
    """Order-invariant string encoding of a rooted leaf-labeled tree.

    Two trees get equal forms iff they are isomorphic as leaf-labeled rooted
    trees: each internal vertex encodes as the lexicographically sorted
    encodings of its children.
    """
    children = _tree_children_map(tree)
    if tree.root is None:
        raise PhyloError("tree has no unique root")
    forms: dict[int, str] = {}
    stack: list[tuple[int, bool]] = [(tree.root, False)]
    while stack:
        v, ready = stack.pop()
        if not children[v]:
            forms[v] = tree.leaf_labels[v]
            continue
        if ready:
            parts = sorted(forms[c] for c in children[v])
            forms[v] = "(" + ",".join(parts) + ")"
        else:
            stack.append((v, True))
            for c in children[v]:
                stack.append((c, False))
    return forms[tree.root]


def build_caterpillar(labels: Sequence[str], start_id: int = 0) -> PhyloTree:
    """Caterpillar tree on >= 2 distinct labels; labels[0] is the deepest leaf.

    The first two labels form the bottom cherry; each later label attaches
    one spine vertex higher, so the last label hangs off the root.
    """
    seq = [str(s) for s in labels]
    if len(seq) < 2:
        raise LabelError("caterpillar needs at least two labels")
    if len(set(seq)) != len(seq):
        raise LabelError("caterpillar labels must be distinct")
    g = Digraph()
    leaf_ids = [g.new_vertex(label=s) for s in seq]
    spine = g.new_vertex()
    g.add_edge(spine, leaf_ids[0])
    g.add_edge(spine, leaf_ids[1])
    for leaf in leaf_ids[2:]:
        top = g.new_vertex()
        g.add_edge(top, spine)
        g.add_edge(top, leaf)
        spine = top
    return g.freeze()


def contains_caterpillar(tree: PhyloTree, labels: Sequence[str]) -> bool:
    """True iff the tree has a subtree that is a subdivision of the caterpillar.

    In a tree, the minimal subtree connecting a leaf set is unique and sits
    inside every subtree containing those leaves, so this is equivalent to
    the restriction to the caterpillar's labels being that caterpillar.
    """
    target = build_caterpillar(labels)
    return canonical_form(restrict(tree, labels)) == canonical_form(target)


@dataclass
class CaterpillarDecomposition:
    """Maximal top-to-bottom block decomposition along a caterpillar spine.

    ``decomposable`` is False when the root's child subgraphs overlap, in
    which case ``blocks`` holds the whole network as a single block.
    """
    blocks: list[PhyloNetwork]
    decomposable: bool

    def __len__(self) -> int:
        return len(self.blocks)


def decompose_caterpillar_blocks(net: PhyloNetwork) -> CaterpillarDecomposition:
    """Split a caterpillar network into vertex-disjoint blocks, top first.

    At each spine vertex the two child subgraphs must be vertex-disjoint
    (a reticulation edge crossing the spine makes them overlap); ties between
    equally deep decompositions are broken deterministically.
    """
    if net.root is None:
        raise PhyloError("network has no unique root")
    reach: dict[int, set[int]] = {}
    for v in reversed(net.topological_order()):
        acc = {v}
        for c in net.children(v):
            acc |= reach[c]
        reach[v] = acc

    def split(v: int) -> Optional[tuple[int, int]]:
        cs = net.children(v)
        if len(cs) != 2:
            return None
        a, b = cs
        if reach[a] & reach[b]:
            return None
        return a, b

    depth: dict[int, int] = {}

    def depth_of(v: int) -> int:
        if v in depth:
            return depth[v]
        s = split(v)
        d = 1 if s is None else 1 + max(depth_of(s[0]), depth_of(s[1]))
        depth[v] = d
        return d

    if split(net.root) is None:
        return CaterpillarDecomposition([net], False)

    blocks: list[PhyloNetwork] = []
    v = net.root
    while True:
        s = split(v)
        if s is None:
            blocks.append(net.subnetwork(v))
            break
        a, b = s
        # Continue the spine into the deeper side; prefer the larger, then
        # the lexicographically earlier subgraph on ties.
        key_a = (depth_of(a), len(reach[a]), -a)
        key_b = (depth_of(b), len(reach[b]), -b)
        cont, block_root = (a, b) if key_a >= key_b else (b, a)
        blocks.append(net.subnetwork(block_root))
        v = cont
    return CaterpillarDecomposition(blocks, True)
