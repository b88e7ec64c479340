"""Structured text documents: reports, config files, and sidecar metadata.

One format serves all three. A document starts with a header line declaring
its kind and schema version, followed by named sections of `key = value` lines
and named tables of comma-separated rows:

    # mnarmc report v1

    [config]
    n1 = 100
    seed = 7

    [table:results]
    method,rmse_mean
    pairwise,0.82306719...

Floats are written with 17 significant digits so that reading them back
reproduces the original binary values exactly.
"""

import io

SCHEMA_VERSION = 1


def fmt(value):
    """Render a value for a document cell; floats keep full precision."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return "null"
    return str(value)


def parse_scalar(text):
    """Best-effort inverse of fmt(): bool/None/int/float, else the raw string."""
    t = text.strip()
    if t == "true":
        return True
    if t == "false":
        return False
    if t == "null":
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


class Document:
    """An ordered collection of key-value sections and CSV tables."""

    def __init__(self, kind):
        self.kind = kind
        self.sections = {}
        self.tables = {}

    def section(self, name):
        return self.sections.setdefault(name, {})

    def set(self, section, key, value):
        self.section(section)[key] = value

    def add_table(self, name, columns, rows):
        self.tables[name] = (list(columns), [list(r) for r in rows])

    def dumps(self):
        out = io.StringIO()
        out.write(f"# mnarmc {self.kind} v{SCHEMA_VERSION}\n")
        for name, kv in self.sections.items():
            out.write(f"\n[{name}]\n")
            for key, value in kv.items():
                out.write(f"{key} = {fmt(value)}\n")
        for name, (columns, rows) in self.tables.items():
            out.write(f"\n[table:{name}]\n")
            out.write(",".join(columns) + "\n")
            for row in rows:
                cells = [fmt(c) for c in row]
                for cell in cells:
                    if "," in cell or "\n" in cell:
                        raise ValueError(f"table cell {cell!r} needs quoting, which this format does not support")
                out.write(",".join(cells) + "\n")
        return out.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def loads(cls, text):
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# mnarmc "):
            raise ValueError("not a mnarmc document (missing header line)")
        head = lines[0][len("# mnarmc "):].rsplit(" v", 1)
        if len(head) != 2 or not head[1].isdigit():
            raise ValueError(f"malformed document header: {lines[0]!r}")
        if int(head[1]) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {head[1]}")
        doc = cls(head[0])
        mode = None  # ("section", name) or ("table", name)
        table_cols = None
        for raw in lines[1:]:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
                if name.startswith("table:"):
                    mode = ("table", name[len("table:"):])
                    table_cols = None
                else:
                    mode = ("section", name)
                    doc.section(name)
                continue
            if mode is None:
                raise ValueError(f"content before first section: {raw!r}")
            if mode[0] == "section":
                if "=" not in line:
                    raise ValueError(f"malformed key-value line: {raw!r}")
                key, _, value = line.partition("=")
                doc.set(mode[1], key.strip(), parse_scalar(value))
            else:
                cells = line.split(",")
                if table_cols is None:
                    table_cols = cells
                    doc.add_table(mode[1], cells, [])
                else:
                    doc.tables[mode[1]][1].append([parse_scalar(c) for c in cells])
        return doc

    @classmethod
    def read(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.loads(f.read())
