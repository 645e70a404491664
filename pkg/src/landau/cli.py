"""Command-line interface and result-file I/O.

Result files are plain text in blocks separated by ``####`` banners, mirrored by a
JSON file holding the same record.  Exit codes: 0 success, 1 error, 2 partial.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .elim import ElimConfig, ElimError, euler_discriminant_q, get_pld, specialized_pad
from .graphs import DiagramSpec, FeynmanGraph, GraphError, library_spec
from .numeric import EulerCharConfig, NumericError, TrackerConfig, complex_normal, euler_characteristic
from .oneloop import SUBSPACES, OneLoopError, oneloop_pad
from .polytope import f_vector, face_weights, initial_form, newton_polytope, normalized_volume
from .ratpoly import MPoly, PolyError, natural_key, parse

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2
BANNER = "#" * 32


class CLIError(Exception):
    pass


# -- result records -------------------------------------------------------------

@dataclass
class ComponentRecord:
    D: str
    chi: int | None
    weights: list[list[int]]
    computed_with: list[str]


@dataclass
class ResultRecord:
    """Everything a result file holds; polynomials are stored as printed strings."""

    name: str
    edges: list[list[int]]
    nodes: list[int]
    internal_masses: list[str]
    external_masses: list[str]
    U: str
    F: str
    parameters: list[str]
    variables: list[str]
    chi_generic: int | None
    f_vector: list[int]
    components: list[ComponentRecord] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.unresolved)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "edges": self.edges,
            "nodes": self.nodes,
            "internal_masses": self.internal_masses,
            "external_masses": self.external_masses,
            "U": self.U,
            "F": self.F,
            "parameters": self.parameters,
            "variables": self.variables,
            "chi_generic": self.chi_generic,
            "f_vector": self.f_vector,
            "components": [
                {"D": c.D, "chi": c.chi, "weights": c.weights, "computed_with": c.computed_with}
                for c in self.components
            ],
            "unresolved": self.unresolved,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ResultRecord:
        comps = [ComponentRecord(c["D"], c["chi"], [list(w) for w in c["weights"]], list(c["computed_with"])) for c in d["components"]]
        return cls(
            d["name"], [list(e) for e in d["edges"]], list(d["nodes"]), list(d["internal_masses"]),
            list(d["external_masses"]), d["U"], d["F"], list(d["parameters"]), list(d["variables"]),
            d["chi_generic"], list(d["f_vector"]), comps, list(d.get("unresolved", [])),
        )


_XVAR = re.compile(r"\bx(\d+)\b")
_XBRACKET = re.compile(r"\bx\[(\d+)\]")


def show_poly(p: MPoly | str, first: Sequence[str] = ()) -> str:
    """Print with Schwinger parameters as x[i]; ``first`` orders those symbols ahead."""
    if isinstance(p, MPoly) and first:
        front = [v for v in first if v in p.vars]
        p = p.with_vars(front + [v for v in p.vars if v not in front])
    return _XVAR.sub(r"x[\1]", str(p))


def read_poly(text: str) -> MPoly:
    return parse(_XBRACKET.sub(r"x\1", text))


def record_from_result(res) -> ResultRecord:
    comps = []
    for c in sorted(res.components, key=lambda c: (c.delta.degree(), str(c.delta.monic()))):
        comps.append(
            ComponentRecord(
                show_poly(c.delta.monic()),
                c.chi,
                [list(w) for w in c.weights],
                [f"PLD_{m}" for m in c.methods],
            )
        )
    unresolved = []
    for rep in res.faces:
        for issue in rep.issues:
            w = "[" + ", ".join(str(x) for x in rep.face.weight) + "]"
            unresolved.append(f"codim: {rep.face.codim}, face: {rep.face.face_id[1]}/{rep.count}, weights: {w}, issue: {issue}")
    return ResultRecord(
        res.name, res.edges, res.nodes, list(res.internal_masses), list(res.external_masses),
        show_poly(res.U, res.params), show_poly(res.F, res.params), list(res.params), [show_poly(v) for v in res.vars],
        res.chi_generic, list(res.f_vector), comps, unresolved,
    )


# -- text format ----------------------------------------------------------------------

def _section(title: str) -> list[str]:
    return [BANNER, f"# {title}", BANNER, ""]


def _list(items: Sequence) -> str:
    return "[" + ", ".join(str(x) for x in items) + "]"


def _opt(v) -> str:
    return "nothing" if v is None else str(v)


def format_result(rec: ResultRecord) -> str:
    out = _section("Diagram information")
    out += [f"name = {json.dumps(rec.name)}", ""]
    out += [
        f"edges = {_list(_list(e) for e in rec.edges)}",
        f"nodes = {_list(rec.nodes)}",
        f"internal_masses = {_list(rec.internal_masses)}",
        f"external_masses = {_list(rec.external_masses)}",
        "",
        f"U = {rec.U}",
        f"F = {rec.F}",
        f"parameters = {_list(rec.parameters)}",
        f"variables = {_list(rec.variables)}",
        "",
        f"χ_generic = {_opt(rec.chi_generic)}",
        f"f_vector = {_list(rec.f_vector)}",
        "",
    ]
    for i, c in enumerate(rec.components, start=1):
        out += _section(f"Component {i}")
        out += [
            f"D[{i}] = {c.D}",
            f"χ[{i}] = {_opt(c.chi)}",
            f"weights[{i}] = {_list(_list(w) for w in c.weights)}",
            f"computed_with[{i}] = {json.dumps(c.computed_with)}",
            "",
        ]
    if rec.unresolved:
        out += _section("Unresolved faces")
        out += [f"unresolved[{i}] = {json.dumps(u, ensure_ascii=False)}" for i, u in enumerate(rec.unresolved, start=1)]
        out.append("")
    return "\n".join(out)


def _split_top(text: str) -> list[str]:
    inner = text.strip()
    if not (inner.startswith("[") and inner.endswith("]")):
        raise CLIError(f"expected a bracketed list, got {text!r}")
    inner = inner[1:-1].strip()
    if not inner:
        return []
    parts, depth, cur = [], 0, []
    for ch in inner:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


def _int_opt(v: str) -> int | None:
    return None if v == "nothing" else int(v)


def parse_result(text: str, source: str = "<text>") -> ResultRecord:
    """Inverse of :func:`format_result`; errors name the offending line."""
    values: dict[str, str] = {}
    comps: dict[int, dict[str, str]] = {}
    unresolved: dict[int, str] = {}
    key_re = re.compile(r"^(\w+|χ_generic|χ)(?:\[(\d+)\])? = (.*)$")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        m = key_re.match(line)
        if not m:
            raise CLIError(f"{source}:{lineno}: cannot parse {line!r}")
        key, idx, val = m.groups()
        if idx is None:
            values[key] = val
        elif key == "unresolved":
            unresolved[int(idx)] = json.loads(val)
        else:
            comps.setdefault(int(idx), {})[key] = val
    try:
        components = [
            ComponentRecord(
                c["D"], _int_opt(c["χ"]), json.loads(c["weights"]), json.loads(c["computed_with"])
            )
            for _, c in sorted(comps.items())
        ]
        return ResultRecord(
            json.loads(values["name"]),
            json.loads(values["edges"]),
            json.loads(values["nodes"]),
            _split_top(values["internal_masses"]),
            _split_top(values["external_masses"]),
            values["U"],
            values["F"],
            _split_top(values["parameters"]),
            _split_top(values["variables"]),
            _int_opt(values["χ_generic"]),
            json.loads(values["f_vector"]),
            components,
            [u for _, u in sorted(unresolved.items())],
        )
    except KeyError as exc:
        raise CLIError(f"{source}: missing field {exc.args[0]}") from exc
    except (ValueError, json.JSONDecodeError) as exc:
        raise CLIError(f"{source}: {exc}") from exc


def save_record(rec: ResultRecord, path: str | Path, json_path: str | Path | None = None):
    Path(path).write_text(format_result(rec), encoding="utf-8")
    if json_path is not None:
        Path(json_path).write_text(json.dumps(rec.to_dict(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def load_record(path: str | Path) -> ResultRecord:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            return ResultRecord.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise CLIError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_result(text, str(path))


def save_database_entry(root: str | Path, spec: DiagramSpec, rec: ResultRecord, tag: str = "") -> Path:
    """One directory per diagram and mass configuration: spec.json, result.txt, result.json."""
    d = Path(root) / (spec.name + (f"-{tag}" if tag else ""))
    d.mkdir(parents=True, exist_ok=True)
    (d / "spec.json").write_text(json.dumps(spec.to_dict(), indent=1) + "\n", encoding="utf-8")
    save_record(rec, d / "result.txt", d / "result.json")
    return d


# -- argument handling -------------------------------------------------------------------

def _masses(text: str | None):
    if text is None:
        return None
    text = text.strip()
    if text.lstrip(":").lower() in ("generic", "zero", "equal"):
        return text
    return [t.strip() for t in text.split(",")]


def _json_arg(text: str, flag: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIError(f"{flag}: column {exc.colno}: {exc.msg}") from exc


def diagram_from_args(args) -> DiagramSpec:
    if args.spec:
        spec = DiagramSpec.load(args.spec)
    elif args.diagram:
        spec = library_spec(args.diagram)
    elif args.edges is not None:
        if args.nodes is None:
            raise CLIError("--edges requires --nodes")
        edges = _json_arg(args.edges, "--edges")
        nodes = _json_arg(args.nodes, "--nodes")
        if not isinstance(edges, list) or not all(isinstance(e, list) and len(e) == 2 for e in edges):
            raise CLIError("--edges: expected a list of [u, v] pairs")
        spec = DiagramSpec(FeynmanGraph(tuple(tuple(e) for e in edges), tuple(nodes), name=args.name or "diagram"))
    else:
        raise CLIError("give a diagram with --diagram NAME, --spec FILE or --edges/--nodes")
    im, em = _masses(args.internal_masses), _masses(args.external_masses)
    rel = dict(spec.relations)
    for item in args.relation or []:
        if "=" not in item:
            raise CLIError(f"--relation: expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        rel[k.strip()] = v.strip()
    return DiagramSpec(spec.graph, im if im is not None else spec.internal_masses, em if em is not None else spec.external_masses, rel)


def _weight(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace("[", "").replace("]", "").split(",") if t.strip()]
    except ValueError as exc:
        raise CLIError(f"bad weight {text!r}") from exc


def _tracker(args) -> TrackerConfig:
    return TrackerConfig(seed=args.seed, threads=args.threads)


def _chi_cfg(args) -> EulerCharConfig:
    return EulerCharConfig(trials=args.trials, seed=args.seed, tracker=_tracker(args))


def _random_point(params: Sequence[str], seed: int) -> dict[str, complex]:
    rng = np.random.default_rng([seed, 2024])
    return {p: complex(v) for p, v in zip(params, complex_normal(rng, len(params)))}


# -- subcommands --------------------------------------------------------------------------

def cmd_pld(args, out: Callable[[str], None]) -> int:
    if args.load:
        rec = load_record(args.load)
    else:
        spec = diagram_from_args(args)
        echo = (lambda s: print(s, file=sys.stderr, flush=True)) if args.verbose else None
        res = get_pld(
            spec,
            method=args.method,
            homogeneous=not args.inhomogeneous,
            cfg=ElimConfig(seed=args.seed, tracker=_tracker(args)),
            codim_start=args.codim_start,
            face_start=args.face_start,
            single_face=args.single_face,
            single_weight=_weight(args.single_weight) if args.single_weight else None,
            with_chi=not args.no_chi,
            chi_cfg=_chi_cfg(args),
            echo=echo,
        )
        rec = record_from_result(res)
    if args.save:
        save_record(rec, args.save)
    if args.json:
        Path(args.json).write_text(json.dumps(rec.to_dict(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    out(format_result(rec).rstrip("\n"))
    return EXIT_PARTIAL if rec.partial else EXIT_OK


def _G(args):
    sy = diagram_from_args(args).symanzik()
    return sy


def cmd_symanzik(args, out) -> int:
    sy = _G(args)
    out(f"U = {show_poly(sy.U, sy.params)}")
    out(f"F = {show_poly(sy.F, sy.params)}")
    out(f"parameters = {_list(sy.params)}")
    out(f"variables = {_list(show_poly(v) for v in sy.vars)}")
    return EXIT_OK


def cmd_weights(args, out) -> int:
    sy = _G(args)
    P = newton_polytope(sy.G, sy.vars)
    descs = face_weights(P)
    counts: dict[int, int] = {}
    for d in descs:
        counts[d.codim] = counts.get(d.codim, 0) + 1
    for codim in sorted(counts, reverse=True):
        out(f"# codim {codim}: {counts[codim]} faces")
        for d in descs:
            if d.codim == codim:
                out(f"codim: {codim}, face: {d.face_id[1]}/{counts[codim]}, weights: {_list(d.weight)}")
    return EXIT_OK


def cmd_initial_form(args, out) -> int:
    sy = _G(args)
    w = _weight(args.weight)
    if len(w) != len(sy.vars):
        raise CLIError(f"--weight has {len(w)} entries, the diagram has {len(sy.vars)} edges")
    out(show_poly(initial_form(sy.G, w, sy.vars), sy.params))
    return EXIT_OK


def cmd_euler(args, out) -> int:
    sy = _G(args)
    chi = euler_characteristic(sy.G, sy.vars, _random_point(sy.params, args.seed), _chi_cfg(args))
    out(str(chi))
    return EXIT_OK


def cmd_volume(args, out) -> int:
    sy = _G(args)
    P = newton_polytope(sy.G, sy.vars)
    fv = f_vector(P)
    out(f"volume = {normalized_volume(P)}")
    out(f"f_vector = {_list(fv)}")
    out(f"faces = {sum(fv) + 1}")
    return EXIT_OK


def _read_candidates(args) -> list[MPoly]:
    texts = list(args.candidate or [])
    if args.candidates:
        for lineno, line in enumerate(Path(args.candidates).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                texts.append(line)
    if not texts:
        raise CLIError("give candidates with --candidate POLY or --candidates FILE")
    out = []
    for t in texts:
        try:
            out.append(parse(t))
        except PolyError as exc:
            raise CLIError(f"candidate {t!r}: {exc}") from exc
    return out


def cmd_euler_disc_q(args, out) -> int:
    sy = _G(args)
    cands = _read_candidates(args)
    verdicts = euler_discriminant_q(sy.G, sy.params, sy.vars, cands, _chi_cfg(args))
    for v in verdicts:
        out(f"{'accept' if v.is_component else 'reject'}\tχ = {v.chi}\t{v.candidate}")
    out(f"accepted {sum(v.is_component for v in verdicts)} of {len(verdicts)} (χ_generic = {verdicts[0].chi_generic if verdicts else 'nothing'})")
    return EXIT_OK


def cmd_specialized_pad(args, out) -> int:
    p = parse(args.poly)
    vars = [v.strip() for v in args.vars.split(",") if v.strip()]
    missing = [v for v in vars if v not in p.used_vars()]
    if missing:
        raise CLIError(f"--vars: {', '.join(missing)} do not occur in the polynomial")
    params = sorted((v for v in p.used_vars() if v not in vars), key=natural_key)
    comps = specialized_pad(
        p, params, vars, method=args.method, homogeneous=not args.inhomogeneous,
        cfg=ElimConfig(seed=args.seed, tracker=_tracker(args)),
    )
    for c in sorted(comps, key=lambda c: (c.delta.degree(), str(c.delta.monic()))):
        out(str(c.delta.monic()))
    return EXIT_OK


def cmd_oneloop(args, out) -> int:
    pad = oneloop_pad(args.n, args.subspace, substituted=not args.unsubstituted)
    for line in pad.table():
        out(line)
    if pad.identically_zero:
        out("# the product vanishes identically on this subspace")
    return EXIT_OK


COMMANDS = {
    "pld": cmd_pld,
    "symanzik": cmd_symanzik,
    "weights": cmd_weights,
    "initial-form": cmd_initial_form,
    "euler": cmd_euler,
    "volume": cmd_volume,
    "euler-disc-q": cmd_euler_disc_q,
    "specialized-pad": cmd_specialized_pad,
    "oneloop": cmd_oneloop,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--method", choices=("sym", "num", "auto"), default="num")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=10, help="Euler characteristic trials")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--inhomogeneous", action="store_true", help="fit non-homogeneous discriminants")

    diagram = argparse.ArgumentParser(add_help=False)
    diagram.add_argument("--diagram", help="library diagram name, e.g. par, B3, A4, outer-dbox")
    diagram.add_argument("--spec", help="diagram spec JSON file")
    diagram.add_argument("--edges", help='JSON edge list, e.g. "[[1,2],[2,1]]"')
    diagram.add_argument("--nodes", help='JSON list of vertices carrying external legs')
    diagram.add_argument("--name")
    diagram.add_argument("--internal-masses", help="generic, zero, equal or a comma list")
    diagram.add_argument("--external-masses", help="generic, zero, equal or a comma list")
    diagram.add_argument("--relation", action="append", help="subspace relation name=value (repeatable)")

    p = argparse.ArgumentParser(prog="landau", description="Principal Landau determinants of Feynman diagrams.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("pld", parents=[common, diagram], help="principal Landau determinant")
    q.add_argument("--codim-start", type=int, default=-1)
    q.add_argument("--face-start", type=int, default=1)
    q.add_argument("--single-face", action="store_true")
    q.add_argument("--single-weight", help='"w1,w2,..."; other face filters are ignored')
    q.add_argument("--save", help="write the text result file")
    q.add_argument("--load", help="read a result file instead of computing")
    q.add_argument("--json", help="write the JSON mirror")
    q.add_argument("--no-chi", action="store_true", help="skip Euler characteristics")

    for name, text in (
        ("symanzik", "print U, F and G"),
        ("weights", "list face weights of the Newton polytope of G"),
        ("euler", "signed Euler characteristic of the complement of G"),
        ("volume", "normalized volume and f-vector of the Newton polytope"),
    ):
        sub.add_parser(name, parents=[common, diagram], help=text)
    q = sub.add_parser("initial-form", parents=[common, diagram], help="initial form of G for one weight")
    q.add_argument("--weight", required=True, help='"w1,w2,..."')
    q = sub.add_parser("euler-disc-q", parents=[common, diagram], help="test candidates by the Euler characteristic drop")
    q.add_argument("--candidate", action="append")
    q.add_argument("--candidates", help="file with one polynomial per line")
    q = sub.add_parser("specialized-pad", parents=[common], help="principal A-determinant of a coefficient family")
    q.add_argument("--poly", required=True)
    q.add_argument("--vars", required=True, help="comma list of torus variables")
    q = sub.add_parser("oneloop", parents=[common], help="one-loop factor table from Z minors")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--subspace", choices=SUBSPACES, default="generic")
    q.add_argument("--unsubstituted", action="store_true")
    return p


WEIGHT_FLAGS = ("--weight", "--single-weight")


def _join_weights(argv: Sequence[str]) -> list[str]:
    """Glue weight flags to their value so argparse accepts "--weight -1,-1"."""
    out: list[str] = []
    it = iter(argv)
    for a in it:
        if a in WEIGHT_FLAGS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_weights(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    out = lambda s: print(s, flush=True)  # noqa: E731
    try:
        return COMMANDS[args.command](args, out)
    except (CLIError, GraphError, PolyError, ElimError, NumericError, OneLoopError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
