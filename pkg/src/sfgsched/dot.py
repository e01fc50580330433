"""GraphViz export of signal-flow graphs."""

from __future__ import annotations

from .graph import SFG, NodeKind

_STYLE = {
    NodeKind.INPUT: ("invhouse", "lightskyblue"),
    NodeKind.OUTPUT: ("house", "palegreen"),
    NodeKind.CONSTANT: ("diamond", "gainsboro"),
    NodeKind.MEMDATA: ("box", "khaki"),
    NodeKind.OPERATION: ("circle", "white"),
}


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: SFG) -> str:
    """Render the graph as a DOT digraph.

    Node ordering is by id and edges by (consumer, position), so output is
    deterministic.  Shape and fill colour distinguish the five node kinds.
    """
    lines = ["digraph sfg {"]
    for n in sorted(g.nodes, key=lambda n: n.id):
        shape, color = _STYLE[n.kind]
        text = n.name if n.kind is not NodeKind.OPERATION else (n.op or "?")
        lines.append(
            f'  n{n.id} [label="{_escape(text)}", shape={shape}, '
            f'style=filled, fillcolor={color}];'
        )
    for e in sorted(g.edges, key=lambda e: (e.dst, e.pos, e.src)):
        lines.append(f'  n{e.src} -> n{e.dst} [label="{e.pos}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
