import parsimonious


class ListVisitor(parsimonious.NodeVisitor):
    def visit_list(self, node, visited_children):
        _, first, more, _ = visited_children
        items = [first]
        if isinstance(more, list):
            items.extend(more)
        return items

    def visit_more(self, node, visited_children):
        return visited_children[-1]

    def visit_item(self, node, visited_children):
        return visited_children[0]

    def visit_range(self, node, visited_children):
        lo, _, _, _, hi = visited_children
        return lo, hi

    def visit_number(self, node, visited_children):
        return node.text

    def generic_visit(self, node, visited_children):
        return visited_children or node


class MappingVisitor(parsimonious.NodeVisitor):
    def visit_mapping(self, node, visited_children):
        _, first, more, _ = visited_children
        pairs = [first]
        if isinstance(more, list):
            pairs.extend(more)
        return pairs

    def visit_more(self, node, visited_children):
        return visited_children[-1]

    def visit_pair(self, node, visited_children):
        key, _, _, _, value = visited_children
        return key.text, value.text.strip()

    def generic_visit(self, node, visited_children):
        return visited_children or node


class GridParser:
    """
    Parses order grids and horizon lists such as "4..30", "1,2,5..9" or
    "10, 50, 100". Ranges are inclusive and only allowed for integers.
    """

    def __init__(self, kind=int):
        self._kind = kind
        self._grammar = parsimonious.grammar.Grammar(
            r"""
                list   = _ item more* _
                more   = _ "," _ item
                item   = range / number
                range  = number _ ".." _ number
                number = ~r"[0-9]+(\.[0-9]+)?"
                _      = ~r"\s*"
            """)

    def _convert(self, text):
        if self._kind is int:
            if '.' in text:
                raise ValueError(f"expected an integer, got '{text}'")
            return int(text)
        else:
            return float(text)

    def __call__(self, spec):
        if not isinstance(spec, str):
            return [self._kind(x) for x in spec]

        try:
            tree = self._grammar.parse(spec)
            items = ListVisitor().visit(tree)
        except parsimonious.ParseError:
            raise ValueError(
                f"'{spec}' is not a valid list specification")

        values = []
        for item in items:
            if isinstance(item, tuple):
                lo, hi = (self._convert(x) for x in item)
                if self._kind is not int:
                    raise ValueError(f"ranges need integer bounds, got '{spec}'")
                if hi < lo:
                    raise ValueError(f"empty range {lo}..{hi}")
                values.extend(range(lo, hi + 1))
            else:
                values.append(self._convert(item))
        return values


class MappingParser:
    """
    Parses inline mappings such as "wind=WindSpeed,power=Power".
    """

    def __init__(self):
        self._grammar = parsimonious.grammar.Grammar(
            r"""
                mapping = _ pair more* _
                more    = _ "," _ pair
                pair    = key _ "=" _ value
                key     = ~r"[A-Za-z_]+"
                value   = ~r"[^,=\s][^,=]*"
                _       = ~r"\s*"
            """)

    def __call__(self, spec):
        try:
            tree = self._grammar.parse(spec)
            pairs = MappingVisitor().visit(tree)
        except parsimonious.ParseError:
            raise ValueError(
                f"'{spec}' is not a valid column mapping")
        return dict(pairs)


parse_grid = GridParser(int)
parse_horizons = GridParser(float)
parse_mapping = MappingParser()
