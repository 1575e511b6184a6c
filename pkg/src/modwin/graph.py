"""Explicit state graphs and their fair-closed strongly connected components.

A run under a starvation-free schedule eventually stays inside one strongly
connected component and, inside it, takes an edge for every fairness label
infinitely often.  Conversely any such component can be held forever by a
fair schedule.  The minimum of a state objective over the reachable
fair-closed components is therefore the worst case over fair schedules of
the limit inferior of that objective.

Successor functions return ``(label, next_state)`` pairs.  A label stands
for "this kind of user acts"; it is required of a component when it is
offered by some state of that component.
"""

from collections import deque


class CapExceeded(RuntimeError):
    """Raised when an exact engine would exceed its configured state cap."""


class StateGraph:
    def __init__(self, initial, successors, cap=None):
        states = [initial]
        index = {initial: 0}
        edges = []
        i = 0
        while i < len(states):
            out = []
            for label, nxt in successors(states[i]):
                j = index.get(nxt)
                if j is None:
                    j = len(states)
                    index[nxt] = j
                    states.append(nxt)
                    if cap is not None and j >= cap:
                        raise CapExceeded("state space too large; use quotient engine")
                out.append((label, j))
            edges.append(out)
            i += 1
        self.states = states
        self.index = index
        self.edges = edges

    def __len__(self):
        return len(self.states)


def strongly_connected_components(adjacency):
    """Iterative Tarjan over an adjacency list of integer node ids."""
    n = len(adjacency)
    order = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    components = []
    counter = 0
    for root in range(n):
        if order[root] != -1:
            continue
        order[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, 0)]
        while work:
            v, pos = work[-1]
            succ = adjacency[v]
            if pos < len(succ):
                work[-1] = (v, pos + 1)
                w = succ[pos]
                if order[w] == -1:
                    order[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and order[w] < low[v]:
                    low[v] = order[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == order[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                components.append(comp)
    return components


class FairAnalysis:
    """Reachable graph plus its fair-closed components."""

    def __init__(self, graph: StateGraph):
        self.graph = graph
        adjacency = [[j for _, j in out] for out in graph.edges]
        components = strongly_connected_components(adjacency)
        comp_of = [0] * len(graph)
        for c, comp in enumerate(components):
            for v in comp:
                comp_of[v] = c
        fair = []
        for c, comp in enumerate(components):
            required, satisfied = set(), set()
            for v in comp:
                for label, w in graph.edges[v]:
                    required.add(label)
                    if comp_of[w] == c:
                        satisfied.add(label)
            if required == satisfied:
                fair.append(comp)
        fair.sort(key=lambda comp: comp[0])
        self.components = fair
        self._comp_of = comp_of

    def fair_states(self):
        """Fair-closed components as lists of decoded-by-caller states."""
        return [[self.graph.states[v] for v in comp] for comp in self.components]

    def minimize(self, objective):
        """Return ``(value, component, node)`` minimizing ``objective``."""
        best = None
        for comp in self.components:
            for v in comp:
                val = objective(self.graph.states[v])
                if best is None or val < best[0]:
                    best = (val, comp, v)
        return best

    def equilibria(self):
        """States whose every transition is a self-loop."""
        out = []
        for comp in self.components:
            if len(comp) == 1:
                v = comp[0]
                if all(w == v for _, w in self.graph.edges[v]):
                    out.append(self.graph.states[v])
        return out

    def _path(self, src, dst, allowed=None):
        if src == dst:
            return [], dst
        parent = {src: None}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for label, w in self.graph.edges[v]:
                if w in parent or (allowed is not None and w not in allowed):
                    continue
                parent[w] = (v, label)
                if w == dst:
                    labels = []
                    while parent[w] is not None:
                        w, label = parent[w]
                        labels.append(label)
                    labels.reverse()
                    return labels, dst
                queue.append(w)
        raise ValueError("target not reachable")

    def witness(self, comp, target):
        """Label sequences (prefix, tour) reaching ``target`` and touring ``comp``.

        The tour starts and ends at ``target``, stays inside ``comp`` and
        takes an in-component edge for every label the component offers.
        """
        members = set(comp)
        prefix, _ = self._path(0, target)
        needed = {}
        for v in comp:
            for label, w in self.graph.edges[v]:
                if w in members and label not in needed:
                    needed[label] = (v, w)
        tour, here = [], target
        for label in sorted(needed, key=_label_key):
            v, w = needed[label]
            leg, _ = self._path(here, v, members)
            tour.extend(leg)
            tour.append(label)
            here = w
        leg, _ = self._path(here, target, members)
        tour.extend(leg)
        return prefix, tour


def _label_key(label):
    if isinstance(label, tuple):
        return tuple(-1 if x is None else x for x in label)
    return (label,)
