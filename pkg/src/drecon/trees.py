"""Rooted binary trees with named leaves and optional internal event labels.

One representation serves species, gene, and protein trees. A tree is frozen
once wrapped in :class:`PhyloTree`; every editing helper returns a new tree,
so trees and their lazily built LCA indexes can be shared across threads.
"""

import math

from .errors import CapError, NewickError

EVENT_LABELS = ("Spec", "Dup", "Creat")

_RESERVED = set("();,:")


class Node:
    """A node of a rooted binary tree.

    Leaves carry a name; internal nodes may carry an event label out of
    ``Spec``, ``Dup``, ``Creat``. ``index`` is the preorder position assigned
    by the owning PhyloTree and is the stable node identifier.
    """

    __slots__ = ("parent", "left", "right", "name", "label", "index")

    def __init__(self, name=None, label=None):
        self.parent = None
        self.left = None
        self.right = None
        self.name = name
        self.label = label
        self.index = -1

    @property
    def is_leaf(self):
        return self.left is None

    @property
    def children(self):
        if self.left is None:
            return ()
        return (self.left, self.right)

    def __repr__(self):
        if self.is_leaf:
            return f"Node({self.name!r})"
        tag = f":{self.label}" if self.label else ""
        return f"Node(#{self.index}{tag})"


def leaf(name):
    """Make a detached leaf node."""
    return Node(name=name)


def join(left, right, label=None):
    """Make a detached internal node over two subtree roots."""
    node = Node(label=label)
    node.left = left
    node.right = right
    left.parent = node
    right.parent = node
    return node


class PhyloTree:
    """Immutable rooted binary tree over uniquely named leaves.

    The constructor takes ownership of a detached node structure, validates
    it (binary, unique leaf names, known labels) and indexes it in preorder.
    """

    __slots__ = ("_root", "_nodes", "_leaves", "_by_name", "_depth",
                 "_size", "_clades", "_lca_index")

    def __init__(self, root):
        if root is None:
            raise ValueError("tree must have a root")
        nodes = []
        leaves = []
        by_name = {}
        stack = [root]
        root.parent = None
        while stack:
            node = stack.pop()
            node.index = len(nodes)
            nodes.append(node)
            if node.left is None:
                if node.right is not None:
                    raise ValueError("internal node with a single child")
                if not node.name:
                    raise ValueError("leaf without a name")
                if node.name in by_name:
                    raise ValueError(f"duplicate leaf name {node.name!r}")
                by_name[node.name] = node
                leaves.append(node)
            else:
                if node.right is None:
                    raise ValueError("internal node with a single child")
                if node.label is not None and node.label not in EVENT_LABELS:
                    raise ValueError(f"unknown event label {node.label!r}")
                node.left.parent = node
                node.right.parent = node
                stack.append(node.right)
                stack.append(node.left)
        depth = [0] * len(nodes)
        size = [1] * len(nodes)
        for node in nodes:
            if node.parent is not None:
                depth[node.index] = depth[node.parent.index] + 1
        for node in reversed(nodes):
            if node.parent is not None:
                size[node.parent.index] += size[node.index]
        self._root = root
        self._nodes = tuple(nodes)
        self._leaves = tuple(leaves)
        self._by_name = by_name
        self._depth = depth
        self._size = size
        self._clades = None
        self._lca_index = None

    # -- basic queries -----------------------------------------------------

    @property
    def root(self):
        return self._root

    @property
    def nodes(self):
        """All nodes in preorder (parents before children, left to right)."""
        return self._nodes

    @property
    def leaves(self):
        return self._leaves

    @property
    def leaf_names(self):
        return tuple(l.name for l in self._leaves)

    @property
    def n_leaves(self):
        return len(self._leaves)

    def __len__(self):
        return len(self._nodes)

    def node_by_leaf(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise ValueError(f"unknown leaf name {name!r}") from None

    def has_leaf(self, name):
        return name in self._by_name

    def depth(self, node):
        return self._depth[node.index]

    def subtree_size(self, node):
        return self._size[node.index]

    def bottom_up(self):
        """Nodes in an order where every child precedes its parent."""
        return reversed(self._nodes)

    def is_ancestor(self, anc, node):
        """True iff anc is node or an ancestor of node (preorder intervals)."""
        i = anc.index
        return i <= node.index < i + self._size[i]

    def clade(self, node):
        """Frozenset of leaf names below (and including) node."""
        if self._clades is None:
            clades = [None] * len(self._nodes)
            for n in self.bottom_up():
                if n.is_leaf:
                    clades[n.index] = frozenset((n.name,))
                else:
                    clades[n.index] = clades[n.left.index] | clades[n.right.index]
            self._clades = clades
        return self._clades[node.index]

    def clades(self):
        """Map from each node's leaf-name set to the node."""
        return {self.clade(n): n for n in self._nodes}

    # -- LCA queries (Euler tour + sparse table, built lazily) --------------

    def _build_lca_index(self):
        first = [-1] * len(self._nodes)
        euler = []
        edepth = []
        stack = [(self._root, 0)]
        while stack:
            node, state = stack.pop()
            i = node.index
            if first[i] < 0:
                first[i] = len(euler)
            euler.append(i)
            edepth.append(self._depth[i])
            if state == 0 and not node.is_leaf:
                stack.append((node, 1))
                stack.append((node.left, 0))
            elif state == 1:
                stack.append((node, 2))
                stack.append((node.right, 0))
        m = len(euler)
        levels = max(1, m.bit_length())
        table = [list(range(m))]
        for k in range(1, levels):
            half = 1 << (k - 1)
            if 2 * half > m:
                break
            prev = table[-1]
            row = []
            for i in range(m - 2 * half + 1):
                a, b = prev[i], prev[i + half]
                row.append(a if edepth[a] <= edepth[b] else b)
            table.append(row)
        self._lca_index = (first, euler, edepth, table)

    def lca_nodes(self, a, b):
        """Lowest common ancestor of two nodes of this tree."""
        if self._lca_index is None:
            self._build_lca_index()
        first, euler, edepth, table = self._lca_index
        i, j = first[a.index], first[b.index]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        left = table[k][i]
        right = table[k][j - (1 << k) + 1]
        best = left if edepth[left] <= edepth[right] else right
        return self._nodes[euler[best]]

    def lca(self, names):
        """LCA of a nonempty set of leaf names."""
        it = iter(names)
        try:
            node = self.node_by_leaf(next(it))
        except StopIteration:
            raise ValueError("lca of an empty leaf set") from None
        for name in it:
            node = self.lca_nodes(node, self.node_by_leaf(name))
        return node

    # -- derived trees -----------------------------------------------------

    def restrict(self, keep):
        """Tree induced by the leaf subset ``keep``, degree-2 nodes suppressed.

        The root of the result corresponds to the LCA of ``keep``; event
        labels of surviving nodes are preserved.
        """
        keep = frozenset(keep)
        if not keep:
            raise ValueError("cannot restrict to an empty leaf set")
        unknown = [n for n in keep if n not in self._by_name]
        if unknown:
            raise ValueError(f"unknown leaf name {sorted(unknown)[0]!r}")
        built = [None] * len(self._nodes)
        for node in self.bottom_up():
            if node.is_leaf:
                if node.name in keep:
                    built[node.index] = Node(name=node.name)
            else:
                l = built[node.left.index]
                r = built[node.right.index]
                if l is not None and r is not None:
                    built[node.index] = join(l, r, label=node.label)
                else:
                    built[node.index] = l if l is not None else r
        return PhyloTree(built[self._root.index])

    def canonical_form(self, with_labels=True):
        """Canonical string: equal iff trees are isomorphic as leaf-labeled
        rooted trees (and, when ``with_labels``, carry equal event labels)."""
        enc = [None] * len(self._nodes)
        for node in self.bottom_up():
            if node.is_leaf:
                enc[node.index] = node.name
            else:
                a = enc[node.left.index]
                b = enc[node.right.index]
                if b < a:
                    a, b = b, a
                tag = node.label if (with_labels and node.label) else ""
                enc[node.index] = f"({a},{b}){tag}"
        return enc[self._root.index]

    def newick(self):
        """Newick string with event labels rendered as internal node names."""
        enc = [None] * len(self._nodes)
        for node in self.bottom_up():
            if node.is_leaf:
                enc[node.index] = node.name
            else:
                tag = node.label or ""
                enc[node.index] = f"({enc[node.left.index]},{enc[node.right.index]}){tag}"
        return enc[self._root.index] + ";"

    def __repr__(self):
        return f"PhyloTree({self.newick()!r})"


# -- structure copies and edits ---------------------------------------------

def copy_nodes(node, drop_labels=False):
    """Fresh detached copy of the structure rooted at ``node``."""
    out_root = Node(name=node.name, label=None if drop_labels else node.label)
    stack = [(node, out_root)]
    while stack:
        src, dst = stack.pop()
        if src.left is not None:
            dst.left = Node(name=src.left.name,
                            label=None if drop_labels else src.left.label)
            dst.right = Node(name=src.right.name,
                             label=None if drop_labels else src.right.label)
            dst.left.parent = dst
            dst.right.parent = dst
            stack.append((src.left, dst.left))
            stack.append((src.right, dst.right))
    return out_root


def subtree_as_tree(tree, node):
    """The complete subtree rooted at ``node`` as a standalone tree."""
    return PhyloTree(copy_nodes(node))


def strip_labels(tree):
    """Copy of ``tree`` with all event labels removed."""
    return PhyloTree(copy_nodes(tree.root, drop_labels=True))


def join_trees(left, right, label=None):
    """New tree with the two argument trees as subtrees of a fresh root."""
    return PhyloTree(join(copy_nodes(left.root), copy_nodes(right.root), label=label))


def with_event_labels(tree, labels):
    """Copy of ``tree`` with labels applied from a node -> label mapping.

    ``labels`` is keyed by nodes of ``tree`` itself; unlisted internal nodes
    keep their current label.
    """
    new = PhyloTree(copy_nodes(tree.root))
    for node, lab in labels.items():
        twin = new.nodes[node.index]
        if twin.is_leaf:
            raise ValueError("cannot label a leaf with an event")
        if lab is not None and lab not in EVENT_LABELS:
            raise ValueError(f"unknown event label {lab!r}")
        twin.label = lab
    return new


def rename_leaves(tree, mapping, drop_labels=False):
    """Copy of ``tree`` with every leaf renamed through ``mapping``."""
    out = copy_nodes(tree.root, drop_labels=drop_labels)
    stack = [out]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            node.name = mapping[node.name]
        else:
            stack.append(node.left)
            stack.append(node.right)
    return PhyloTree(out)


def with_replaced_subtrees(tree, replacements):
    """Copy of ``tree`` with whole subtrees swapped out.

    ``replacements`` maps nodes of ``tree`` (pairwise incomparable) to the
    replacement trees spliced in at those positions.
    """
    by_index = {node.index: sub for node, sub in replacements.items()}

    def build(node):
        sub = by_index.get(node.index)
        if sub is not None:
            return copy_nodes(sub.root)
        return None

    root_sub = build(tree.root)
    if root_sub is not None:
        return PhyloTree(root_sub)
    out_root = Node(name=tree.root.name, label=tree.root.label)
    stack = [(tree.root, out_root)]
    while stack:
        src, dst = stack.pop()
        if src.left is None:
            continue
        for side in ("left", "right"):
            child = getattr(src, side)
            twin = build(child)
            if twin is None:
                twin = Node(name=child.name, label=child.label)
                stack.append((child, twin))
            setattr(dst, side, twin)
            twin.parent = dst
    return PhyloTree(out_root)


# -- Newick I/O ---------------------------------------------------------------

def _skip_ws(text, i):
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _scan_name(text, i):
    j = i
    while j < len(text) and text[j] not in _RESERVED and not text[j].isspace():
        j += 1
    return text[i:j], j


def _skip_branch_length(text, i):
    if i < len(text) and text[i] == ":":
        j = i + 1
        while j < len(text) and (text[j].isdigit() or text[j] in ".eE+-"):
            j += 1
        try:
            float(text[i + 1:j])
        except ValueError:
            raise NewickError("invalid branch length", i + 1) from None
        return j
    return i


def _parse_one(text, pos):
    """Parse one ';'-terminated tree starting at ``pos``.

    Returns (root node, position just past the ';').
    """
    i = _skip_ws(text, pos)
    stack = []          # (offset of '(', collected children)
    seen = set()
    current = None
    expecting = True
    while True:
        i = _skip_ws(text, i)
        if i >= len(text):
            if stack:
                raise NewickError("unbalanced parentheses", stack[-1][0])
            raise NewickError("unexpected end of input", i)
        ch = text[i]
        if expecting:
            if ch == "(":
                stack.append((i, []))
                i += 1
            elif ch in _RESERVED:
                raise NewickError(f"expected a subtree, found {ch!r}", i)
            else:
                name, j = _scan_name(text, i)
                if not name:
                    raise NewickError("expected a leaf name", i)
                if name in seen:
                    raise NewickError(f"duplicate leaf name {name!r}", i)
                seen.add(name)
                current = leaf(name)
                i = _skip_branch_length(text, j)
                expecting = False
        elif ch == ",":
            if not stack:
                raise NewickError("comma outside parentheses", i)
            stack[-1][1].append(current)
            current = None
            i += 1
            expecting = True
        elif ch == ")":
            if not stack:
                raise NewickError("unbalanced parentheses", i)
            open_off, kids = stack.pop()
            kids.append(current)
            if len(kids) != 2:
                raise NewickError(
                    f"non-binary vertex with {len(kids)} children", open_off)
            current = join(kids[0], kids[1])
            i += 1
            name, j = _scan_name(text, i)
            if name:
                if name not in EVENT_LABELS:
                    raise NewickError(
                        f"unknown internal label {name!r} "
                        "(expected Spec, Dup, or Creat)", i)
                current.label = name
                i = j
            i = _skip_branch_length(text, i)
        elif ch == ";":
            if stack:
                raise NewickError("unbalanced parentheses", stack[-1][0])
            return current, i + 1
        else:
            raise NewickError(f"unexpected character {ch!r}", i)


def parse_newick(text):
    """Parse a single ';'-terminated Newick expression into a tree."""
    root, pos = _parse_one(text, 0)
    rest = _skip_ws(text, pos)
    if rest < len(text):
        raise NewickError("trailing characters after tree", rest)
    return PhyloTree(root)


def parse_newick_many(text):
    """Parse a sequence of ';'-terminated Newick expressions, in order."""
    trees = []
    pos = _skip_ws(text, 0)
    while pos < len(text):
        root, pos = _parse_one(text, pos)
        trees.append(PhyloTree(root))
        pos = _skip_ws(text, pos)
    if not trees:
        raise NewickError("no tree found", 0)
    return trees


def serialize_newick(tree):
    """Inverse of parse_newick: event labels become internal node names."""
    return tree.newick()


# -- topology enumeration -----------------------------------------------------

def n_topologies(n):
    """Number of rooted binary leaf-labeled topologies: (2n-3)!! for n >= 2."""
    if n < 2:
        return 1
    return math.prod(range(2 * n - 3, 0, -2))


def _insertions(shape, name):
    yield (shape, name)
    if isinstance(shape, tuple):
        l, r = shape
        for l2 in _insertions(l, name):
            yield (l2, r)
        for r2 in _insertions(r, name):
            yield (l, r2)


def _shapes(names, k):
    if k == 1:
        yield names[0]
        return
    for shape in _shapes(names, k - 1):
        yield from _insertions(shape, names[k - 1])


def _from_shape(shape):
    if isinstance(shape, tuple):
        return join(_from_shape(shape[0]), _from_shape(shape[1]))
    return leaf(shape)


def enumerate_topologies(leaves, cap=8):
    """Yield every rooted binary topology on the leaf set exactly once.

    There are (2n-3)!! of them for n leaves; leaf sets above ``cap`` are
    refused because the count grows as a double factorial.
    """
    names = sorted(set(leaves))
    if not names:
        raise ValueError("cannot enumerate topologies on an empty leaf set")
    if len(names) > cap:
        raise CapError(
            f"{len(names)} leaves exceeds the enumeration cap of {cap}")
    for shape in _shapes(names, len(names)):
        yield PhyloTree(_from_shape(shape))
