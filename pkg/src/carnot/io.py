"""File formats: group definitions, subalgebra and morphism files, experiment
configs, CSV emission, and run manifests.

Group-definition files are JSON with exact rationals serialized as num/den
integer pairs (bit-exact round trips); emission is canonical, so identical
structures produce identical bytes.
"""

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import GradedAlgebra, validate_table

Q = Fraction

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# group definition files
# ---------------------------------------------------------------------------

def group_to_dict(algebra, metric=None):
    brackets = []
    for (i, j) in sorted(algebra.struct):
        terms = [{"k": k + 1, "num": c.numerator, "den": c.denominator}
                 for k, c in sorted(algebra.struct[(i, j)].items())]
        brackets.append({"i": i + 1, "j": j + 1, "terms": terms})
    out = {
        "name": algebra.name,
        "dim": algebra.dim,
        "step": algebra.step,
        "layers": list(algebra.layer_of),
        "basis_names": list(algebra.basis_names),
        "brackets": brackets,
    }
    if metric is not None:
        out["metric"] = {"kind": metric.kind, "weights": list(metric.weights)}
    return out


def emit_group(algebra, metric=None):
    """Canonical byte-stable serialization."""
    return json.dumps(group_to_dict(algebra, metric), indent=2,
                      sort_keys=False) + "\n"


def parse_group_dict(data, check=True):
    dim = int(data["dim"])
    step = int(data["step"])
    layers = [int(x) for x in data["layers"]]
    assert len(layers) == dim, "layers array length != dim"
    names = data.get("basis_names") or None
    entries = []
    for b in data.get("brackets", []):
        i, j = int(b["i"]) - 1, int(b["j"]) - 1
        if not (i < j):
            raise ValueError("bracket entries must satisfy i < j (got %d, %d)"
                             % (i + 1, j + 1))
        for t in b["terms"]:
            entries.append((i, j, int(t["k"]) - 1, Q(int(t["num"]), int(t["den"]))))
    if check:
        report = validate_table(dim, step, layers, entries)
        if not report.ok:
            raise ValueError("invalid group definition:\n%s" % report)
    struct = {}
    for (i, j, k, c) in entries:
        struct.setdefault((i, j), {})[k] = struct.get((i, j), {}).get(k, Q(0)) + c
    alg = GradedAlgebra(data.get("name", "group"), layers, struct,
                        basis_names=names, check=check)
    if "metric" in data:
        alg.tags["metric_spec"] = data["metric"]
    return alg


def load_group(path, check=True):
    with open(path) as f:
        data = json.load(f)
    return parse_group_dict(data, check=check)


def validate_group_file(path):
    """Parse + validate; returns (report_or_None, error_string_or_None)."""
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        return None, "parse error at line %d column %d: %s" % (e.lineno, e.colno, e.msg)
    try:
        dim = int(data["dim"])
        step = int(data["step"])
        layers = [int(x) for x in data["layers"]]
        entries = []
        for b in data.get("brackets", []):
            i, j = int(b["i"]) - 1, int(b["j"]) - 1
            for t in b["terms"]:
                entries.append((i, j, int(t["k"]) - 1,
                                Q(int(t["num"]), int(t["den"]))))
    except (KeyError, ValueError, TypeError) as e:
        return None, "schema error: %s" % e
    return validate_table(dim, step, layers, entries), None


# ---------------------------------------------------------------------------
# rationals, vectors, subalgebras, morphisms
# ---------------------------------------------------------------------------

def parse_rational(text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return Q(int(num), int(den))
    return Q(text)


def parse_vector(text, dim=None):
    parts = [p for p in text.split(",") if p.strip() != ""]
    if dim is not None and len(parts) != dim:
        raise ValueError("expected %d coordinates, got %d" % (dim, len(parts)))
    return tuple(parse_rational(p) for p in parts)


def format_rational(q):
    q = Q(q)
    return str(q.numerator) if q.denominator == 1 else "%d/%d" % (
        q.numerator, q.denominator)


def format_vector(coords):
    return ",".join(format_rational(c) for c in coords)


def load_subalgebra_vectors(path):
    with open(path) as f:
        data = json.load(f)
    return [tuple(parse_rational(str(c)) for c in vec) for vec in data["vectors"]]


def subalgebra_to_dict(sub):
    return {"vectors": [[format_rational(c) for c in v] for v in sub.basis()]}


def load_morphism(path, group_loader):
    """Morphism file: {domain, codomain, matrix} with groups as catalog names
    or paths and rationals as strings."""
    from .morphism import GradedMorphism
    with open(path) as f:
        data = json.load(f)
    dom = group_loader(data["domain"])
    cod = group_loader(data["codomain"])
    matrix = [[parse_rational(str(c)) for c in row] for row in data["matrix"]]
    return GradedMorphism(dom, cod, matrix)


# ---------------------------------------------------------------------------
# CSV and manifests
# ---------------------------------------------------------------------------

def write_csv(path, header, rows):
    """Numeric cells are emitted with 17 significant digits (full float
    round trip)."""
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for c in row:
                if isinstance(c, float):
                    cells.append("%.17g" % c)
                else:
                    cells.append(str(c))
            f.write(",".join(cells) + "\n")
    return path


def constants_csv(path, constants):
    return write_csv(path, ["label", "nu", "samples", "sup"],
                     [c.csv_row() for c in constants])


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    version: str = "0.1.0"
    outputs: list = field(default_factory=list)

    def add_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    def write(self, path):
        with open(path, "w") as f:
            json.dump({"command": self.command, "inputs": self.inputs,
                       "seed": self.seed, "version": self.version,
                       "outputs": self.outputs, "format": FORMAT_VERSION},
                      f, indent=2, sort_keys=True)
            f.write("\n")
        return path
