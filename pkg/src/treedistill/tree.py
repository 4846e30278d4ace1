"""Binary CART classifier: Gini splits, reduced-error pruning, path-length metrics.

Split search runs through the core kernel (compiled or numpy backend);
everything else is plain Python over an explicit node structure.
"""

from dataclasses import dataclass, field

import numpy as np

from treedistill.core import best_split_column
from treedistill.errors import InputError, ShapeError


@dataclass
class TreeNode:
    """One tree node; a leaf when ``left`` is None.

    ``class_counts`` is the training-label histogram of the rows that
    reached the node, and ``class_label`` its argmax (lowest index wins
    ties). Internal nodes keep both so pruning can collapse them into
    majority leaves.
    """

    class_label: int
    class_counts: np.ndarray
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def is_leaf(self):
        return self.left is None


@dataclass(frozen=True)
class DtParams:
    min_samples_leaf: int = 1
    max_depth: int | None = None

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise InputError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InputError("max_depth must be >= 1 when set")


@dataclass
class DecisionTree:
    root: TreeNode
    n_features: int
    n_classes: int
    feature_names: list[str] | None = field(default=None)


def _leaf(y_counts):
    return TreeNode(class_label=int(np.argmax(y_counts)), class_counts=y_counts)


def _grow(X, y, idx, depth, params, n_classes):
    counts = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
    if np.count_nonzero(counts) <= 1:
        return _leaf(counts)
    if params.max_depth is not None and depth >= params.max_depth:
        return _leaf(counts)

    best = None  # (score, feature, threshold)
    for f in range(X.shape[1]):
        col = X[idx, f]
        order = np.argsort(col)
        found = best_split_column(
            np.ascontiguousarray(col[order]),
            np.ascontiguousarray(y[idx][order]),
            n_classes,
            params.min_samples_leaf,
        )
        if found is None:
            continue
        score, threshold, _ = found
        # strict > keeps the lowest feature index on score ties
        if best is None or score > best[0]:
            best = (score, f, threshold)
    if best is None:
        return _leaf(counts)

    _, f, threshold = best
    mask = X[idx, f] <= threshold
    node = _leaf(counts)
    node.feature = f
    node.threshold = threshold
    node.left = _grow(X, y, idx[mask], depth + 1, params, n_classes)
    node.right = _grow(X, y, idx[~mask], depth + 1, params, n_classes)
    return node


def fit_tree(X, y, params=DtParams(), n_classes=None, feature_names=None):
    """Fit a binary CART tree minimizing weighted child Gini impurity.

    Thresholds are midpoints of consecutive distinct sorted values; growth
    stops on purity, ``max_depth``, or when no split keeps
    ``min_samples_leaf`` rows on both sides. Ties between equal-impurity
    splits resolve to the lowest feature index, then smallest threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ShapeError("X must be a 2-D matrix")
    if X.shape[0] == 0:
        raise InputError("cannot fit a tree on an empty dataset")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"labels have shape {y.shape}, expected ({X.shape[0]},)")
    if y.min() < 0:
        raise InputError("labels must be non-negative class indices")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    elif y.max() >= n_classes:
        raise InputError(f"label {int(y.max())} out of range for {n_classes} classes")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise InputError("feature_names must cover all features")

    root = _grow(X, y, np.arange(X.shape[0]), 0, params, n_classes)
    names = list(feature_names) if feature_names is not None else None
    return DecisionTree(root=root, n_features=X.shape[1], n_classes=n_classes, feature_names=names)


def _route(node, x):
    while not node.is_leaf():
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def predict_tree(tree, X):
    """Route each row to a leaf and return leaf class labels."""
    X = _check_features(tree, X)
    return np.array([_route(tree.root, x).class_label for x in X], dtype=np.int64)


def predict_proba_tree(tree, X):
    """Leaf class-count proportions per row, shape (n, n_classes)."""
    X = _check_features(tree, X)
    out = np.empty((X.shape[0], tree.n_classes), dtype=np.float64)
    for i, x in enumerate(X):
        counts = _route(tree.root, x).class_counts
        out[i] = counts / counts.sum()
    return out


def _check_features(tree, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ShapeError(f"expected (n, {tree.n_features}) input, got {X.shape}")
    return X


def _copy_node(node):
    return TreeNode(
        class_label=node.class_label,
        class_counts=node.class_counts.copy(),
        feature=node.feature,
        threshold=node.threshold,
        left=None if node.left is None else _copy_node(node.left),
        right=None if node.right is None else _copy_node(node.right),
    )


def _internal_nodes_deepest_first(root):
    # preorder walk recording depth; sort deepest first, preorder position breaks ties
    out = []

    def walk(node, depth):
        if node.is_leaf():
            return
        out.append((depth, len(out), node))
        walk(node.left, depth + 1)
        walk(node.right, depth + 1)

    walk(root, 0)
    out.sort(key=lambda t: (-t[0], t[1]))
    return [n for _, _, n in out]


def prune_tree(tree, X_val, y_val):
    """Reduced-error pruning against a held-out set.

    Visits internal nodes deepest-first and replaces each with its
    majority-class leaf whenever accuracy on ``(X_val, y_val)`` does not
    decrease; passes repeat until no replacement happens. Returns a new
    tree; the input is untouched.
    """
    X_val = _check_features(tree, X_val)
    y_val = np.asarray(y_val, dtype=np.int64)
    if X_val.shape[0] == 0:
        raise InputError("validation set must be non-empty")
    if y_val.shape != (X_val.shape[0],):
        raise ShapeError("validation labels do not match validation rows")

    pruned = DecisionTree(
        root=_copy_node(tree.root),
        n_features=tree.n_features,
        n_classes=tree.n_classes,
        feature_names=None if tree.feature_names is None else list(tree.feature_names),
    )
    current = float(np.mean(predict_tree(pruned, X_val) == y_val))

    changed = True
    while changed:
        changed = False
        for node in _internal_nodes_deepest_first(pruned.root):
            saved = (node.feature, node.threshold, node.left, node.right)
            node.feature = node.threshold = node.left = node.right = None
            acc = float(np.mean(predict_tree(pruned, X_val) == y_val))
            if acc >= current:
                current = acc
                changed = True
            else:
                node.feature, node.threshold, node.left, node.right = saved
    return pruned


def apl(tree, X):
    """Average path length: mean count of internal nodes crossed per row.

    Computed by one aggregate traversal (each internal node contributes
    the number of rows reaching it); a single-leaf tree scores 0.
    """
    X = _check_features(tree, X)
    if X.shape[0] == 0:
        raise InputError("APL needs at least one row")

    def crossings(node, rows):
        if node.is_leaf() or rows.shape[0] == 0:
            return 0
        mask = rows[:, node.feature] <= node.threshold
        return rows.shape[0] + crossings(node.left, rows[mask]) + crossings(node.right, rows[~mask])

    return crossings(tree.root, X) / X.shape[0]


def node_count(tree):
    def count(node):
        if node.is_leaf():
            return 1
        return 1 + count(node.left) + count(node.right)

    return count(tree.root)


def leaf_count(tree):
    def count(node):
        if node.is_leaf():
            return 1
        return count(node.left) + count(node.right)

    return count(tree.root)


def depth(tree):
    def walk(node):
        if node.is_leaf():
            return 0
        return 1 + max(walk(node.left), walk(node.right))

    return walk(tree.root)


def _names(tree, feature_names):
    names = feature_names if feature_names is not None else tree.feature_names
    if names is None:
        names = [f"x{i}" for i in range(tree.n_features)]
    if len(names) != tree.n_features:
        raise InputError(f"need {tree.n_features} feature names, got {len(names)}")
    return names


def _class_name(class_names, label):
    return class_names[label] if class_names is not None else f"class_{label}"


def export_dot(tree, feature_names=None, class_names=None):
    """Render the tree as a Graphviz digraph (one box per node)."""
    names = _names(tree, feature_names)
    lines = ["digraph tree {", "  node [shape=box];"]
    counter = [0]

    def emit(node):
        nid = f"n{counter[0]}"
        counter[0] += 1
        if node.is_leaf():
            counts = ", ".join(str(int(c)) for c in node.class_counts)
            lines.append(f'  {nid} [label="{_class_name(class_names, node.class_label)}\\n[{counts}]"];')
        else:
            lines.append(f'  {nid} [label="{names[node.feature]} ≤ {node.threshold:g}"];')
            left = emit(node.left)
            right = emit(node.right)
            lines.append(f"  {nid} -> {left};")
            lines.append(f"  {nid} -> {right};")
        return nid

    emit(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_rules(tree, feature_names=None, class_names=None):
    """One if-then rule per leaf; antecedent length equals path length."""
    names = _names(tree, feature_names)
    rules = []

    def walk(node, conditions):
        if node.is_leaf():
            antecedent = " and ".join(conditions) if conditions else "true"
            rules.append(f"if {antecedent} then {_class_name(class_names, node.class_label)}")
            return
        walk(node.left, conditions + [f"{names[node.feature]} ≤ {node.threshold:g}"])
        walk(node.right, conditions + [f"{names[node.feature]} > {node.threshold:g}"])

    walk(tree.root, [])
    return "\n".join(rules) + "\n"


TREE_FORMAT = "treedistill-tree"
TREE_VERSION = 1


def tree_to_document(tree):
    """Serialize to a versioned dict with a preorder node list."""
    nodes = []

    def emit(node):
        entry = {
            "class": int(node.class_label),
            "counts": [int(c) for c in node.class_counts],
        }
        if not node.is_leaf():
            entry["feature"] = int(node.feature)
            entry["threshold"] = float(node.threshold)
        nodes.append(entry)
        if not node.is_leaf():
            emit(node.left)
            emit(node.right)

    emit(tree.root)
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "feature_names": tree.feature_names,
        "nodes": nodes,
    }


def tree_from_document(doc):
    if doc.get("format") != TREE_FORMAT:
        raise InputError("not a tree document")
    if doc.get("version") != TREE_VERSION:
        raise InputError(f"unsupported tree document version {doc.get('version')!r}")

    nodes = doc["nodes"]
    pos = [0]

    def read():
        entry = nodes[pos[0]]
        pos[0] += 1
        node = TreeNode(
            class_label=int(entry["class"]),
            class_counts=np.asarray(entry["counts"], dtype=np.int64),
        )
        if "feature" in entry:
            node.feature = int(entry["feature"])
            node.threshold = float(entry["threshold"])
            node.left = read()
            node.right = read()
        return node

    root = read()
    if pos[0] != len(nodes):
        raise InputError("tree document has trailing nodes")
    return DecisionTree(
        root=root,
        n_features=int(doc["n_features"]),
        n_classes=int(doc["n_classes"]),
        feature_names=doc.get("feature_names"),
    )
