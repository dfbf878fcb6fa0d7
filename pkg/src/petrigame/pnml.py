"""A PNML subset: places, transitions, arcs and 0/1 initial markings on one page."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.parsers import expat
from xml.sax.saxutils import quoteattr

from .errors import InputError, ParseError, UnsupportedFeature
from .net import PetriNet

PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"
PTNET_TYPE = "http://www.pnml.org/version-2009/grammar/ptnet"


@dataclass
class _Node:
    tag: str
    attrib: dict
    line: int
    children: list = field(default_factory=list)
    text: str = ""

    def find(self, tag: str):
        return next((c for c in self.children if c.tag == tag), None)

    def findall(self, tag: str):
        return [c for c in self.children if c.tag == tag]

    def text_of(self, *path: str) -> str | None:
        node = self
        for tag in path:
            node = node.find(tag)
            if node is None:
                return None
        return node.text.strip()


def _local(name: str) -> str:
    return name.rsplit(" ", 1)[-1].rsplit("}", 1)[-1].rsplit(":", 1)[-1]


def _parse_tree(data: bytes) -> _Node:
    parser = expat.ParserCreate(namespace_separator=" ")
    stack: list[_Node] = []
    root: list[_Node] = []

    def start(name, attrs):
        node = _Node(_local(name), {_local(k): v for k, v in attrs.items()}, parser.CurrentLineNumber)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(name):
        stack.pop()

    def chars(text):
        if stack:
            stack[-1].text += text

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise ParseError(expat.ErrorString(exc.code), exc.lineno) from None
    return root[0]


def _int_text(node: _Node, value: str | None, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParseError(f"{what} {value!r} is not an integer", node.line) from None


def parse_pnml(data: bytes | str) -> tuple[PetriNet, frozenset[str]]:
    """Parse a PNML document into a net and its initial marking."""
    if isinstance(data, str):
        data = data.encode()
    root = _parse_tree(data)
    nets = [root] if root.tag == "net" else root.findall("net")
    if len(nets) != 1:
        raise ParseError(f"expected exactly one <net> element, found {len(nets)}", root.line)
    net_el = nets[0]
    pages = net_el.findall("page")
    if len(pages) > 1:
        raise UnsupportedFeature(f"line {pages[1].line}: multiple pages are not supported")
    body = pages[0].children if pages else []
    body = body + [c for c in net_el.children if c.tag != "page"]

    places, transitions, lines = [], [], {}
    marked = set()
    for el in body:
        if el.tag in ("place", "transition"):
            ident = el.attrib.get("id")
            if not ident:
                raise ParseError(f"<{el.tag}> without id", el.line)
            if ident in lines:
                raise ParseError(f"duplicate id {ident!r}", el.line)
            lines[ident] = el.line
            if el.tag == "place":
                places.append(ident)
                tokens = el.text_of("initialMarking", "text")
                if tokens:
                    k = _int_text(el, tokens, "initial marking")
                    if k > 1:
                        raise UnsupportedFeature(f"line {el.line}: place {ident!r} starts with {k} tokens")
                    if k < 0:
                        raise ParseError("negative initial marking", el.line)
                    if k == 1:
                        marked.add(ident)
            else:
                transitions.append(ident)
    if not places:
        raise ParseError("net declares no places", net_el.line)

    pre = {t: set() for t in transitions}
    post = {t: set() for t in transitions}
    place_set = set(places)
    for el in body:
        if el.tag != "arc":
            continue
        if el.find("type") is not None or el.attrib.get("type") not in (None, "normal"):
            raise UnsupportedFeature(f"line {el.line}: only normal arcs are supported")
        src, tgt = el.attrib.get("source"), el.attrib.get("target")
        weight = el.text_of("inscription", "text")
        if weight is not None and _int_text(el, weight, "arc weight") != 1:
            raise UnsupportedFeature(f"line {el.line}: arc weight {weight} (only 1 is supported)")
        if src in place_set and tgt in pre:
            pre[tgt].add(src)
        elif src in post and tgt in place_set:
            post[src].add(tgt)
        else:
            raise ParseError(f"arc {src!r} -> {tgt!r} must connect a place and a transition", el.line)
    try:
        net = PetriNet(
            tuple(sorted(places)),
            tuple(sorted(transitions)),
            {t: frozenset(v) for t, v in pre.items()},
            {t: frozenset(v) for t, v in post.items()},
        )
    except InputError as exc:
        bad = next((t for t in transitions if not pre[t] or not post[t]), None)
        raise ParseError(str(exc), lines.get(bad)) from None
    return net, frozenset(marked)


def emit_pnml(net: PetriNet, initial: frozenset[str] = frozenset(), name: str = "net") -> bytes:
    """Serialize ``net`` deterministically; :func:`parse_pnml` inverts it."""
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<pnml xmlns="{PNML_NS}">',
        f"  <net id={quoteattr(name)} type=\"{PTNET_TYPE}\">",
        '    <page id="page0">',
    ]
    for p in net.places:
        if p in initial:
            out.append(f"      <place id={quoteattr(p)}>")
            out.append("        <initialMarking><text>1</text></initialMarking>")
            out.append("      </place>")
        else:
            out.append(f"      <place id={quoteattr(p)}/>")
    for t in net.transitions:
        out.append(f"      <transition id={quoteattr(t)}/>")
    k = 0
    for t in net.transitions:
        for p in sorted(net.pre[t]):
            out.append(f'      <arc id="a{k}" source={quoteattr(p)} target={quoteattr(t)}/>')
            k += 1
        for p in sorted(net.post[t]):
            out.append(f'      <arc id="a{k}" source={quoteattr(t)} target={quoteattr(p)}/>')
            k += 1
    out += ["    </page>", "  </net>", "</pnml>", ""]
    return "\n".join(out).encode()
