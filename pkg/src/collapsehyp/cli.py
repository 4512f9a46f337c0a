"""Command-line pipeline: collapse, hyperbolize, verify.

Every stage reads only files written by earlier stages, and output files
depend only on the inputs and flags, so identical runs give identical
bytes. Exit codes: 0 pass / success, 1 fail (disproved or an error),
2 inconclusive or budget exhausted.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .collapse import CollapseSequence, complex_id, cone_collapse, find_collapse, parse_certificate
from .complex import format_facet_list, read_facet_list
from .curvature import (
    comparison_sample,
    loop_histogram_table,
    right_angled_squares,
    verify_links,
    violation_table,
)
from .errors import BudgetExceededError, CollapseHypError
from .hyperbolize import DEFAULT_EDGE_SCALE, MetricComplex, hyperbolize

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2


@dataclass
class PipelineConfig:
    command: str
    input: Path = None
    cert: Path = None
    metric: Path = None
    seed: int = 0
    restarts: int = 16
    edge_scale: float = DEFAULT_EDGE_SCALE
    refinement: list = field(default_factory=lambda: [3])
    samples: int = 1000
    budget_steps: int = None
    budget_seconds: float = None
    out_dir: Path = Path(".")
    exhaustive: bool = False

    def __post_init__(self):
        for name in ("restarts", "edge_scale", "samples", "budget_steps", "budget_seconds"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise CollapseHypError(f"--{name.replace('_', '-')} must be positive")
        if self.seed < 0:
            raise CollapseHypError("--seed must be nonnegative")
        if any(r <= 0 for r in self.refinement):
            raise CollapseHypError("--refinement must be positive")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _stem(path: Path):
    name = path.name
    for suffix in (".metric.json", ".json", ".fl", ".cert", ".txt"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def cmd_collapse(cfg: PipelineConfig, out=sys.stdout):
    c = read_facet_list(cfg.input)
    strategy = "exhaustive" if cfg.exhaustive else "greedy"
    res = find_collapse(
        c, strategy, seed=cfg.seed, restarts=cfg.restarts,
        budget_steps=cfg.budget_steps, budget_seconds=cfg.budget_seconds,
    )
    stem = _stem(cfg.input)
    report = {
        "input": cfg.input.name,
        "complex_id": complex_id(c),
        "strategy": strategy,
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "status": res.status,
        "reason": res.reason,
        "stats": {k: v for k, v in sorted(res.stats.items()) if k != "seconds"},
    }
    if res.success:
        header = [f"collapse certificate for {cfg.input.name}", f"strategy {strategy} seed {cfg.seed}"]
        path = _write(cfg.out_dir / f"{stem}.cert", res.sequence.to_text(header=header))
        report["steps"] = len(res.sequence.steps)
        report["certificate"] = path.name
        print(f"collapsible: {len(res.sequence.steps)} steps, certificate {path}", file=out)
        code = EXIT_PASS
    elif res.status == "non-collapsible":
        print(f"non-collapsible ({res.reason})", file=out)
        code = EXIT_FAIL
    else:
        if res.partial is not None:
            report["partial_steps"] = len(res.partial.steps)
        print(f"no collapse found ({res.reason}); heuristic failure, not a proof", file=out)
        code = EXIT_INCONCLUSIVE
    _write(cfg.out_dir / f"{stem}.collapse.json", json.dumps(report, sort_keys=True, indent=1) + "\n")
    return code


def cmd_hyperbolize(cfg: PipelineConfig, out=sys.stdout):
    c = read_facet_list(cfg.input)
    text = Path(cfg.cert).read_text()
    steps, point = parse_certificate(text, source=str(cfg.cert))
    seq = CollapseSequence(tuple(steps), complex_id(c), None, point)
    m = hyperbolize(c, seq, cfg.edge_scale)
    path = _write(cfg.out_dir / f"{_stem(cfg.input)}.metric.json", m.to_json())
    print(
        f"metric: {m.n_vertices} vertices, {len(m.simplices)} maximal simplices, "
        f"dimension {m.dimension}, {m.n_steps} steps, max residual {m.max_residual():.3e} -> {path}",
        file=out,
    )
    for st in m.steps:
        print(f"  step {st['step']}: residual {st['residual']:.3e}", file=out)
    return EXIT_PASS


def cmd_verify(cfg: PipelineConfig, out=sys.stdout):
    path = Path(cfg.metric)
    try:
        m = MetricComplex.from_json(path.read_text())
    except json.JSONDecodeError as exc:
        raise CollapseHypError(f"malformed metric file {path}: {exc}") from None
    rep = verify_links(m)
    stats = []
    if m.n_vertices >= 3:
        for r in cfg.refinement:
            stats.append(comparison_sample(m, cfg.samples, r, cfg.seed))
        rep.comparison = {
            "seed": cfg.seed,
            "levels": [s.as_dict() for s in stats],
            "beyond_allowance": sum(s.beyond_allowance for s in stats),
        }
    stem = _stem(path)
    _write(cfg.out_dir / f"{stem}.report.json", rep.to_json())
    _write(cfg.out_dir / f"{stem}.loops.csv", loop_histogram_table(rep.loop_lengths))
    if stats:
        _write(cfg.out_dir / f"{stem}.violations.csv", violation_table(stats))
    print(f"verdict: {rep.verdict}", file=out)
    print(f"  local link condition: {'pass' if rep.local_pass else 'fail'}", file=out)
    print(f"  simply connected: {rep.simply_connected}", file=out)
    for f in rep.failures:
        print(f"  failing link at {' '.join(f['face'])}: loop length {f['loop_length']:.12f} ({f['method']})", file=out)
    for s in stats:
        print(
            f"  comparison r={s.refinement}: max violation {s.max_violation:.6f}, "
            f"allowance {s.allowance:.6f}, beyond allowance {s.beyond_allowance}",
            file=out,
        )
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(rep.verdict, EXIT_INCONCLUSIVE)


def cmd_example(cfg: PipelineConfig, name, out=sys.stdout):
    """Write a bundled example: a facet list or a hand-built metric file."""
    from . import corpus

    complexes = dict(corpus.collapsible_corpus(6))
    complexes.update(corpus.non_collapsible_corpus())
    if name.startswith("squares-"):
        m = right_angled_squares(int(name.split("-")[1]))
        path = _write(cfg.out_dir / f"{name}.metric.json", m.to_json())
    elif name in complexes:
        path = _write(cfg.out_dir / f"{name}.fl", format_facet_list(complexes[name]))
        if name.startswith("simplex-") or name.startswith("cone-"):
            cert = cone_collapse(complexes[name])
            _write(cfg.out_dir / f"{name}.cone.cert", cert.to_text(header=[f"cone collapse certificate for {name}"]))
    else:
        raise CollapseHypError(f"unknown example {name!r}; try simplex-2, dunce-hat, bing-house or squares-3")
    print(f"wrote {path}", file=out)
    return EXIT_PASS


def build_parser():
    p = argparse.ArgumentParser(prog="collapsehyp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", type=Path, default=Path("."), help="directory for output files")
        sp.add_argument("--seed", type=int, default=0, help="seed of the single random generator")

    sp = sub.add_parser("collapse", help="search for a collapse to a point")
    sp.add_argument("--in", dest="input", type=Path, required=True, help="facet-list file")
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--budget-steps", type=int)
    sp.add_argument("--budget-seconds", type=float)
    sp.add_argument("--exhaustive", action="store_true", help="complete search instead of greedy restarts")
    common(sp)

    sp = sub.add_parser("hyperbolize", help="build the piecewise hyperbolic metric")
    sp.add_argument("--in", dest="input", type=Path, required=True, help="facet-list file")
    sp.add_argument("--cert", type=Path, required=True, help="collapse certificate")
    sp.add_argument("--edge-scale", type=float, default=DEFAULT_EDGE_SCALE)
    common(sp)

    sp = sub.add_parser("verify", help="check links and sample comparison triangles")
    sp.add_argument("--metric", type=Path, required=True, help="metric file from hyperbolize")
    sp.add_argument("--refinement", type=int, nargs="+", default=[3], help="one level, or several for a sweep")
    sp.add_argument("--samples", type=int, default=1000)
    common(sp)

    sp = sub.add_parser("example", help="write a bundled input file")
    sp.add_argument("name")
    common(sp)
    return p


def main(argv=None, out=sys.stdout):
    args = build_parser().parse_args(argv)
    kw = {k: v for k, v in vars(args).items() if k in PipelineConfig.__dataclass_fields__}
    try:
        cfg = PipelineConfig(**kw)
        if args.command == "collapse":
            return cmd_collapse(cfg, out)
        if args.command == "hyperbolize":
            return cmd_hyperbolize(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        return cmd_example(cfg, args.name, out)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (CollapseHypError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
