"""Straight-line programs for exact rational maps.

A map is a list of nodes (inputs, constants, ring operations) plus a set of
output node indices.  Evaluation and forward-mode differentiation walk the
node list once; composed maps stay small as programs even when their expanded
polynomial form would be enormous.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .exactcore import QQ, ExactMatrix, format_rational, parse_rational

_OPS = ("input", "const", "add", "sub", "mul", "div")
_BINARY = ("add", "sub", "mul", "div")


class MalformedInput(ValueError):
    """Program fails a structural invariant (cycle, bad arity, bad op)."""


class PoleHit(ArithmeticError):
    def __init__(self, node):
        super().__init__("division by zero at node %d" % node)
        self.node = node


class ChartVanishes(ArithmeticError):
    """The recorded dehomogenization coordinate is zero at this point."""


class ArityMismatch(ValueError):
    pass


def _validate(in_arity, out_arity, nodes, outputs, chart):
    if in_arity < 0 or out_arity <= 0:
        raise MalformedInput("arities must be positive")
    if len(outputs) != out_arity:
        raise MalformedInput("output count disagrees with arity")
    for idx, node in enumerate(nodes):
        op = node[0]
        if op == "input":
            if not (0 <= node[1] < in_arity):
                raise MalformedInput("input index out of range at node %d" % idx)
        elif op == "const":
            if not isinstance(node[1], Fraction):
                raise MalformedInput("constant is not rational at node %d" % idx)
        elif op in _BINARY:
            a, b = node[1], node[2]
            # acyclicity: operands always refer to strictly earlier nodes
            if not (0 <= a < idx and 0 <= b < idx):
                raise MalformedInput("forward or self reference at node %d" % idx)
        else:
            raise MalformedInput("unknown op %r at node %d" % (op, idx))
    for o in outputs:
        if not (0 <= o < len(nodes)):
            raise MalformedInput("output index %d out of range" % o)
    if chart is not None and not (0 <= chart < out_arity):
        raise MalformedInput("chart coordinate out of range")
    if all(nodes[o] == ("const", Fraction(0)) for o in outputs):
        raise MalformedInput("all outputs are literally zero")


def _degree_bounds(nodes):
    deg = []
    for node in nodes:
        op = node[0]
        if op == "input":
            deg.append(1)
        elif op == "const":
            deg.append(0)
        elif op in ("add", "sub"):
            deg.append(max(deg[node[1]], deg[node[2]]))
        else:  # mul, div: rational-function degree bound adds
            deg.append(deg[node[1]] + deg[node[2]])
    return deg


def _is_zero(x):
    probe = getattr(x, "is_zero", None)
    if callable(probe):
        return probe()
    return x == 0


class SlpMap:
    """Immutable exact rational map given by a straight-line program."""

    def __init__(self, in_arity, out_arity, nodes, outputs, chart=None, provenance=None):
        _validate(in_arity, out_arity, nodes, outputs, chart)
        self.in_arity = in_arity
        self.out_arity = out_arity
        self.nodes = tuple(tuple(n) for n in nodes)
        self.outputs = tuple(outputs)
        self.chart = chart
        self.provenance = dict(provenance or {})
        node_deg = _degree_bounds(self.nodes)
        self.degree_bounds = tuple(node_deg[o] for o in self.outputs)

    @classmethod
    def identity(cls, n):
        nodes = [("input", i) for i in range(n)]
        return cls(n, n, nodes, list(range(n)), provenance={"stage": "identity"})

    def __len__(self):
        return len(self.nodes)

    # -- evaluation -----------------------------------------------------------

    def _sweep(self, point, lift):
        if len(point) != self.in_arity:
            raise ArityMismatch(
                "map takes %d inputs, got %d" % (self.in_arity, len(point)))
        vals = []
        for idx, node in enumerate(self.nodes):
            op = node[0]
            if op == "input":
                vals.append(point[node[1]])
            elif op == "const":
                vals.append(lift(node[1]) if lift is not None else node[1])
            elif op == "add":
                vals.append(vals[node[1]] + vals[node[2]])
            elif op == "sub":
                vals.append(vals[node[1]] - vals[node[2]])
            elif op == "mul":
                vals.append(vals[node[1]] * vals[node[2]])
            else:
                d = vals[node[2]]
                if _is_zero(d):
                    raise PoleHit(idx)
                vals.append(vals[node[1]] / d)
        return vals

    def eval(self, point, lift=None):
        vals = self._sweep(point, lift)
        return [vals[o] for o in self.outputs]

    def jacobian(self, point, field=QQ, lift=None):
        """Exact Jacobian of the affine-chart outputs at a point.

        With a recorded chart c the rows are d(out_m/out_c) for m != c;
        without one the raw outputs are differentiated.
        """
        if len(point) != self.in_arity:
            raise ArityMismatch(
                "map takes %d inputs, got %d" % (self.in_arity, len(point)))
        if lift is None:
            lift = field.coerce
        zero = field.zero
        one = field.one
        vals = []
        # ders[idx] is the gradient of node idx w.r.t. all inputs
        ders = []
        for idx, node in enumerate(self.nodes):
            op = node[0]
            if op == "input":
                vals.append(lift(point[node[1]]))
                ders.append([one if j == node[1] else zero
                             for j in range(self.in_arity)])
            elif op == "const":
                vals.append(lift(node[1]))
                ders.append([zero] * self.in_arity)
            elif op == "add":
                vals.append(vals[node[1]] + vals[node[2]])
                ders.append([da + db for da, db
                             in zip(ders[node[1]], ders[node[2]])])
            elif op == "sub":
                vals.append(vals[node[1]] - vals[node[2]])
                ders.append([da - db for da, db
                             in zip(ders[node[1]], ders[node[2]])])
            elif op == "mul":
                a, b = vals[node[1]], vals[node[2]]
                vals.append(a * b)
                ders.append([a * db + b * da for da, db
                             in zip(ders[node[1]], ders[node[2]])])
            else:
                a, b = vals[node[1]], vals[node[2]]
                if _is_zero(b):
                    raise PoleHit(idx)
                vals.append(a / b)
                ders.append([(da * b - a * db) / (b * b) for da, db
                             in zip(ders[node[1]], ders[node[2]])])
        rows = []
        if self.chart is None:
            for o in self.outputs:
                rows.append(list(ders[o]))
        else:
            c = self.outputs[self.chart]
            w = vals[c]
            if _is_zero(w):
                raise ChartVanishes(
                    "chart coordinate %d vanishes at point" % self.chart)
            dw = ders[c]
            for pos, o in enumerate(self.outputs):
                if pos == self.chart:
                    continue
                v, dv = vals[o], ders[o]
                rows.append([(dv_j * w - v * dw_j) / (w * w)
                             for dv_j, dw_j in zip(dv, dw)])
        return ExactMatrix(field, rows, ncols=self.in_arity)

    # -- composition ----------------------------------------------------------

    def compose(self, inner):
        """The map self(inner(...)): inner outputs feed this map's inputs."""
        if inner.out_arity != self.in_arity:
            raise ArityMismatch(
                "outer takes %d inputs, inner yields %d"
                % (self.in_arity, inner.out_arity))
        nodes = list(inner.nodes)
        offset = len(nodes)
        remap = {}
        for idx, node in enumerate(self.nodes):
            op = node[0]
            if op == "input":
                remap[idx] = inner.outputs[node[1]]
                continue
            if op == "const":
                nodes.append(node)
            else:
                nodes.append((op, remap[node[1]], remap[node[2]]))
            remap[idx] = len(nodes) - 1
        outputs = [remap[o] for o in self.outputs]
        prov = {"stage": "compose",
                "outer": self.provenance, "inner": inner.provenance}
        return SlpMap(inner.in_arity, self.out_arity, nodes, outputs,
                      chart=self.chart, provenance=prov)

    # -- serialization --------------------------------------------------------

    def to_json(self):
        nodes = []
        for node in self.nodes:
            if node[0] == "input":
                nodes.append({"op": "input", "args": [node[1]]})
            elif node[0] == "const":
                nodes.append({"op": "const", "args": [],
                              "value": format_rational(node[1])})
            else:
                nodes.append({"op": node[0], "args": [node[1], node[2]]})
        doc = {
            "version": 1,
            "in_arity": self.in_arity,
            "out_arity": self.out_arity,
            "nodes": nodes,
            "outputs": list(self.outputs),
            "degree_bounds": list(self.degree_bounds),
            "provenance": self.provenance,
        }
        if self.chart is not None:
            doc["chart"] = self.chart
        return doc

    def serialize(self):
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, doc):
        try:
            in_arity = int(doc["in_arity"])
            out_arity = int(doc["out_arity"])
            raw_nodes = doc["nodes"]
            outputs = [int(o) for o in doc["outputs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput("missing or invalid field: %s" % exc)
        nodes = []
        for idx, entry in enumerate(raw_nodes):
            try:
                op = entry["op"]
                args = entry["args"]
            except (KeyError, TypeError) as exc:
                raise MalformedInput("bad node %d: %s" % (idx, exc))
            if op == "input":
                if len(args) != 1:
                    raise MalformedInput("input node %d needs one index" % idx)
                nodes.append(("input", int(args[0])))
            elif op == "const":
                try:
                    nodes.append(("const", parse_rational(str(entry["value"]))))
                except (KeyError, ValueError) as exc:
                    raise MalformedInput("bad constant at node %d: %s" % (idx, exc))
            elif op in _BINARY:
                if len(args) != 2:
                    raise MalformedInput("node %d needs two operands" % idx)
                nodes.append((op, int(args[0]), int(args[1])))
            else:
                raise MalformedInput("unknown op %r at node %d" % (op, idx))
        chart = doc.get("chart")
        m = cls(in_arity, out_arity, nodes, outputs,
                chart=None if chart is None else int(chart),
                provenance=doc.get("provenance"))
        # declared bounds are advisory; recomputed ones win, disagreement is
        # a sign of a tampered file
        declared = doc.get("degree_bounds")
        if declared is not None and [int(d) for d in declared] != list(m.degree_bounds):
            raise MalformedInput("degree bounds do not match the node list")
        return m

    @classmethod
    def deserialize(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput("not JSON: %s" % exc)
        if not isinstance(doc, dict):
            raise MalformedInput("top level must be an object")
        return cls.from_json(doc)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.serialize())
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.deserialize(fh.read())


# -- construction helper -------------------------------------------------------


class NodeRef:
    """Handle to a builder node; arithmetic builds new nodes."""

    __slots__ = ("builder", "index")

    def __init__(self, builder, index):
        self.builder = builder
        self.index = index

    def _coerce(self, other):
        if isinstance(other, NodeRef):
            if other.builder is not self.builder:
                raise ValueError("mixing nodes from different builders")
            return other
        return self.builder.const(other)

    def __add__(self, other):
        return self.builder._emit("add", self, self._coerce(other))

    def __radd__(self, other):
        return self.builder._emit("add", self._coerce(other), self)

    def __sub__(self, other):
        return self.builder._emit("sub", self, self._coerce(other))

    def __rsub__(self, other):
        return self.builder._emit("sub", self._coerce(other), self)

    def __mul__(self, other):
        return self.builder._emit("mul", self, self._coerce(other))

    def __rmul__(self, other):
        return self.builder._emit("mul", self._coerce(other), self)

    def __truediv__(self, other):
        return self.builder._emit("div", self, self._coerce(other))

    def __rtruediv__(self, other):
        return self.builder._emit("div", self._coerce(other), self)

    def __neg__(self):
        return self.builder.const(-1) * self

    def __pow__(self, e):
        if not isinstance(e, int) or e < 0:
            raise TypeError("node powers must be nonnegative integers")
        if e == 0:
            return self.builder.const(1)
        acc = self
        for _ in range(e - 1):
            acc = acc * self
        return acc


class SlpBuilder:
    """Assembles an SlpMap; identical subexpressions share one node."""

    def __init__(self, n_inputs):
        self.nodes = []
        self._memo = {}
        self.inputs = [self._raw(("input", i)) for i in range(n_inputs)]
        self.n_inputs = n_inputs

    def _raw(self, node):
        key = node
        found = self._memo.get(key)
        if found is not None:
            return found
        self.nodes.append(node)
        ref = NodeRef(self, len(self.nodes) - 1)
        self._memo[key] = ref
        return ref

    def const(self, value):
        return self._raw(("const", Fraction(value)))

    def _emit(self, op, a, b):
        return self._raw((op, a.index, b.index))

    def finish(self, outputs, chart=None, provenance=None):
        return SlpMap(self.n_inputs, len(outputs), list(self.nodes),
                      [o.index for o in outputs], chart=chart,
                      provenance=provenance)
