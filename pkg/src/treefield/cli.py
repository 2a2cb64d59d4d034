"""Command-line surface.

Subcommands wrap the library end to end: ingestion, preprocessing,
integration, benchmarking, mesh interpolation, metric fitting, spectral
feature extraction and the attention demo. Outputs are machine-readable
(CSV with a "# schema:" comment line, JSON with a schema_version key) and
deterministic given --seed. Exit codes: 0 ok, 2 parse, 3 precondition,
4 numeric.

Scalar-map specs ("--f"), ascending coefficients throughout:

    poly:a0,a1,...          polynomial
    exp:r                   exp(r z)
    exppoly:r;a0,a1,...     exp(r z) * polynomial
    trig:cos | trig:sin     cosine/sine, optional ",frequency"
    rat:a0,../b0,..         rational numerator/denominator
    expoverlin:r,c          exp(r z) / (z + c)
    expquad:u,v,w           exp(u z^2 + v z + w)
    gauss:sigma             exp(-z^2 / (2 sigma^2))
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import learnfit
from .attention import (
    AttentionInputs,
    TopologicalMask,
    grid_mst,
    masked_attention_explicit,
    masked_attention_fast,
)
from .engine import (
    DENSE_VERTEX_GUARD,
    IntegrationSession,
    bgfi_integrate,
    btfi_integrate,
)
from .errors import NumericError, ParseError, PreconditionError, TreeFieldError
from .graphs import (
    TensorField,
    WeightedGraph,
    WeightedTree,
    load_edge_list,
    load_off_mesh,
    minimum_spanning_tree,
    path_with_random_edges,
)
from .itree import DEFAULT_LEAF_THRESHOLD, build_integrator_tree
from .maps import (
    Exponential,
    ExpOverLinear,
    ExpQuadratic,
    ExpTimesPoly,
    Polynomial,
    Rational,
    Trigonometric,
    gaussian,
)
from .spectral import smallest_eigenvalues

SCHEMA_VERSION = "1"


def parse_scalar_map(spec: str):
    """Parse the --f mini-language; raises ParseError on bad input."""
    try:
        kind, _, rest = spec.partition(":")
        if kind == "poly":
            return Polynomial([float(c) for c in rest.split(",")])
        if kind == "exp":
            return Exponential(float(rest))
        if kind == "exppoly":
            rate, _, coeffs = rest.partition(";")
            return ExpTimesPoly(float(rate), [float(c) for c in coeffs.split(",")])
        if kind == "trig":
            parts = rest.split(",")
            freq = float(parts[1]) if len(parts) > 1 else 1.0
            return Trigonometric(parts[0], freq)
        if kind == "rat":
            num, _, den = rest.partition("/")
            return Rational([float(c) for c in num.split(",")],
                            [float(c) for c in den.split(",")])
        if kind == "expoverlin":
            rate, shift = rest.split(",")
            return ExpOverLinear(float(rate), float(shift))
        if kind == "expquad":
            u, v, w = rest.split(",")
            return ExpQuadratic(float(u), float(v), float(w))
        if kind == "gauss":
            return Gaussian(rest)
    except (ValueError, PreconditionError) as exc:
        raise ParseError(f"bad scalar-map spec {spec!r}: {exc}") from exc
    raise ParseError(f"unknown scalar-map kind in {spec!r}")


def Gaussian(rest):
    return gaussian(float(rest))


def _load_tree(args) -> WeightedTree:
    if args.tree:
        g = load_edge_list(args.tree)
        if len(g.edges) != g.n - 1:
            raise PreconditionError(f"{args.tree} is not a tree; use --graph")
        return WeightedTree.from_edges(g.n, g.edges)
    g = load_edge_list(args.graph)
    return minimum_spanning_tree(g)


def _read_field_csv(path, n) -> TensorField:
    rows = {}
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("vertex"):
                continue
            parts = line.split(",")
            try:
                vid = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"{path}:{lineno}: ragged row")
            rows[vid] = vals
    if width is None or len(rows) != n:
        raise ParseError(f"{path}: expected {n} field rows, got {len(rows)}")
    data = np.array([rows[i] for i in range(n)])
    return TensorField(n, (width,), data)


def _write_field_csv(path, field: TensorField):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: integrate-csv v1\n")
        fh.write("vertex," + ",".join(f"x{j}" for j in range(field.width)) + "\n")
        for i in range(field.n):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in field.data[i]) + "\n")


def cmd_integrate(args) -> int:
    t_load0 = time.perf_counter()
    tree = _load_tree(args)
    f = parse_scalar_map(args.f)
    if args.field:
        field = _read_field_csv(args.field, tree.n)
    else:
        rng = np.random.default_rng(args.seed)
        field = TensorField.from_array(rng.standard_normal((tree.n, args.random)))
    t_load1 = time.perf_counter()
    it = build_integrator_tree(tree, args.leaf_threshold, quantization=args.quantize)
    t_pre = time.perf_counter()
    session = IntegrationSession(it)
    out = session.integrate(f, field, strategy_hint=args.strategy,
                            rff_m=args.rff_m, rff_seed=args.seed)
    t_int = time.perf_counter()
    if args.out:
        _write_field_csv(args.out, out)
    print(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "n": tree.n,
        "d": field.width,
        "seconds": {
            "load": t_load1 - t_load0,
            "preprocess": t_pre - t_load1,
            "integrate": t_int - t_pre,
        },
        "strategies": session.strategies_used(),
    }, sort_keys=True))
    return 0


def _bench_tree(tree, f, args, rows, n_label, rng):
    field = TensorField.from_array(rng.standard_normal((tree.n, args.d)))
    t0 = time.perf_counter()
    it = build_integrator_tree(tree, args.leaf_threshold, quantization=args.quantize)
    rows.append((n_label, "FTFI", "preprocess", time.perf_counter() - t0, 0, "", ""))
    session = IntegrationSession(it)
    ftfi_out = None
    for rep in range(args.repeats):
        t0 = time.perf_counter()
        ftfi_out = session.integrate(f, field)
        dt = time.perf_counter() - t0
        rows.append((n_label, "FTFI", "integrate", dt, rep, "",
                     "+".join(sorted(session.strategies_used()))))
    rff_out = None
    if args.rff_m:
        for rep in range(args.repeats):
            t0 = time.perf_counter()
            rff_out = session.integrate(f, field, strategy_hint="rff",
                                        rff_m=args.rff_m, rff_seed=args.seed)
            dt = time.perf_counter() - t0
            rows.append((n_label, "RFF", "integrate", dt, rep, "", "rff"))
    if tree.n <= args.oracle_guard:
        t0 = time.perf_counter()
        btfi_out = btfi_integrate(tree, f, field, force=True)
        rows.append((n_label, "BTFI", "preprocess", time.perf_counter() - t0, 0, "", ""))
        from .graphs import all_pairs_distances
        from .maps import evaluate
        mat = np.asarray(evaluate(f, all_pairs_distances(tree)))
        for rep in range(args.repeats):
            t0 = time.perf_counter()
            _ = mat @ field.data
            rows.append((n_label, "BTFI", "integrate", time.perf_counter() - t0, rep, "", ""))
        diff = float(np.abs(ftfi_out.data - btfi_out.data).max())
        rows[:] = [
            (n, m, p, s, r, (repr(diff) if m == "FTFI" and p == "integrate" and d == "" else d), st)
            for (n, m, p, s, r, d, st) in rows
        ]
        if rff_out is not None:
            rdiff = float(np.abs(rff_out.data - btfi_out.data).max())
            rows[:] = [
                (n, m, p, s, r, (repr(rdiff) if m == "RFF" and d == "" else d), st)
                for (n, m, p, s, r, d, st) in rows
            ]
    return field


def cmd_bench(args) -> int:
    f = parse_scalar_map(args.f)
    rng = np.random.default_rng(args.seed)
    rows = []
    if args.kind == "synthetic":
        sizes = [int(s) for s in args.sizes.split(",")]
        for n in sizes:
            extra = int(round(args.extra_edge_fraction * n))
            g = path_with_random_edges(n, extra, seed=args.seed + n)
            tree = minimum_spanning_tree(g)
            field = _bench_tree(tree, f, args, rows, n, rng)
            if args.bgfi and n <= args.oracle_guard:
                t0 = time.perf_counter()
                bgfi_integrate(g, f, field, force=True)
                rows.append((n, "BGFI", "integrate", time.perf_counter() - t0, 0, "", ""))
    else:
        if args.mesh_dir is None or not Path(args.mesh_dir).is_dir():
            raise ParseError("--kind mesh requires --mesh-dir pointing at OFF files")
        mesh_dir = Path(args.mesh_dir)
        for path in sorted(mesh_dir.iterdir()):
            if path.suffix.lower() != ".off":
                continue
            mesh = load_off_mesh(path)
            tree = minimum_spanning_tree(mesh.graph)
            _bench_tree(tree, f, args, rows, mesh.graph.n, rng)
    lines = ["# schema: bench-csv v1",
             "n,method,phase,seconds,repeat,max_abs_diff,strategies"]
    for n, method, phase, sec, rep, diff, strat in rows:
        lines.append(f"{n},{method},{phase},{sec!r},{rep},{diff},{strat}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_mesh_interpolate(args) -> int:
    if not (0.0 <= args.mask_fraction < 1.0):
        raise PreconditionError("mask fraction must lie in [0, 1)")
    mesh = load_off_mesh(args.off)
    if mesh.graph.num_edges == 0:
        raise PreconditionError(f"{args.off}: mesh has no faces")
    n = mesh.graph.n
    tree = minimum_spanning_tree(mesh.graph)
    t0 = time.perf_counter()
    it = build_integrator_tree(tree, args.leaf_threshold)
    pre_seconds = time.perf_counter() - t0
    session = IntegrationSession(it)

    rng = np.random.default_rng(args.seed)
    n_masked = int(round(args.mask_fraction * n))
    masked = rng.choice(n, size=n_masked, replace=False)
    known_field = mesh.normals.copy()
    known_field[masked] = 0.0
    field = TensorField.from_array(known_field)

    if n_masked == 0:
        print("warning: mask fraction 0 leaves nothing to predict; "
              "cosine similarity is 1.0 by convention", file=sys.stderr)

    lambdas = [float(s) for s in args.lambda_grid.split(",")]
    results = []
    check = None
    for lam in lambdas:
        f = Rational([1.0], [1.0, 0.0, lam]) if lam != 0.0 else Polynomial([1.0])
        t0 = time.perf_counter()
        pred = session.integrate(f, field).data
        dt = time.perf_counter() - t0
        if n <= DENSE_VERTEX_GUARD and check is None:
            brute = btfi_integrate(tree, f, field).data
            denom = max(float(np.linalg.norm(brute)), 1e-300)
            check = float(np.linalg.norm(pred - brute) / denom)
        cos = _mean_cosine(pred[masked], mesh.normals[masked]) if n_masked else 1.0
        results.append({"lambda": lam, "mean_cosine": cos, "integrate_seconds": dt})
    best = max(results, key=lambda r: r["mean_cosine"])
    payload = {
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "masked": int(n_masked),
        "preprocess_seconds": pre_seconds,
        "results": results,
        "best": best,
        "btfi_relative_diff": check,
        "skipped_faces": mesh.skipped_faces,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _mean_cosine(pred: np.ndarray, truth: np.ndarray) -> float:
    pn = np.linalg.norm(pred, axis=1)
    tn = np.linalg.norm(truth, axis=1)
    ok = (pn > 0) & (tn > 0)
    cos = np.zeros(len(pred))
    cos[ok] = np.sum(pred[ok] * truth[ok], axis=1) / (pn[ok] * tn[ok])
    return float(cos.mean())


def cmd_fit(args) -> int:
    g = load_edge_list(args.graph)
    tree = minimum_spanning_tree(g)
    t_deg, s_deg = (int(x) for x in args.degrees.split(","))
    ds = learnfit.sample_dataset(g, tree, count=args.samples, seed=args.seed)
    identity = Polynomial([0.0, 1.0])
    eps_before = learnfit.relative_frobenius_error(g, tree, identity)
    result = learnfit.fit_rational(ds, degrees=(t_deg, s_deg), steps=args.steps,
                                   learning_rate=args.lr, seed=args.seed)
    eps_after = learnfit.relative_frobenius_error(g, tree, result.params.scalar_map())
    payload = {
        "schema_version": SCHEMA_VERSION,
        "params": {"num": list(result.params.num), "den": list(result.params.den)},
        "loss_trace": [float(v) for v in result.loss_trace],
        "eps_before": eps_before,
        "eps_after": eps_after,
        "steps": result.steps,
    }
    text = json.dumps(payload, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_eval_eps(args) -> int:
    g = load_edge_list(args.graph)
    tree = minimum_spanning_tree(g)
    params_path = Path(args.params)
    if not params_path.is_file():
        raise ParseError(f"params file {args.params} not found")
    try:
        blob = json.loads(params_path.read_text(encoding="utf-8"))
        f = Rational(blob["num"], blob["den"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{args.params}: bad params file ({exc})") from exc
    eps = learnfit.relative_frobenius_error(g, tree, f)
    print(json.dumps({"schema_version": SCHEMA_VERSION, "eps": eps}, sort_keys=True))
    return 0


def cmd_features(args) -> int:
    f = parse_scalar_map(args.f)
    directory = Path(args.graphs)
    if not directory.is_dir():
        raise ParseError(f"{args.graphs} is not a directory")
    lines = ["# schema: features-csv v1",
             "graph_id," + ",".join(f"ev_{i + 1}" for i in range(args.k))]
    for path in sorted(directory.iterdir()):
        if not path.is_file():
            continue
        g = load_edge_list(path)
        tree = minimum_spanning_tree(g)
        it = build_integrator_tree(tree, args.leaf_threshold)
        feats = smallest_eigenvalues(it, f, k=args.k, tol=args.tol, seed=args.seed)
        lines.append(path.stem + "," + ",".join(repr(float(v)) for v in feats.eigenvalues))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_attention_demo(args) -> int:
    h, w = (int(x) for x in args.grid.split(","))
    tree = grid_mst(h, w)
    coeffs = [float(c) for c in args.coeffs.split(",")]
    mask = TopologicalMask(tree, args.g, coeffs, leaf_threshold=args.leaf_threshold)
    rng = np.random.default_rng(args.seed)
    L = h * w
    inputs = AttentionInputs(
        queries=rng.standard_normal((L, args.dqk)),
        keys=rng.standard_normal((L, args.dqk)),
        values=rng.standard_normal((L, args.dv)),
        phi=args.phi,
    )
    t0 = time.perf_counter()
    fast = masked_attention_fast(inputs, mask)
    t_fast = time.perf_counter() - t0
    t0 = time.perf_counter()
    explicit = masked_attention_explicit(inputs, mask.matrix())
    t_explicit = time.perf_counter() - t0
    deviation = float(
        np.linalg.norm(fast - explicit) / max(np.linalg.norm(explicit), 1e-300)
    )
    print(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "tokens": L,
        "max_relative_deviation": deviation,
        "seconds_fast": t_fast,
        "seconds_explicit": t_explicit,
        "parameters": mask.num_parameters,
    }, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treefield",
        description="Fast exact integration of vertex fields over weighted trees",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate a field over a tree (or a graph's MST)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tree", help="edge-list file that is already a tree")
    src.add_argument("--graph", help="edge-list file; the MST is used")
    p.add_argument("--f", required=True, help="scalar-map spec, e.g. poly:0,1")
    p.add_argument("--field", help="CSV field file (vertex,x0,...)")
    p.add_argument("--random", type=int, default=1, metavar="D",
                   help="use a random n x D field instead of --field")
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--quantize", type=float, default=None,
                   help="weights are multiples of 1/Q; enables FFT paths")
    p.add_argument("--strategy", default=None,
                   help="force a multiplier strategy (default: auto)")
    p.add_argument("--rff-m", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(fn=cmd_integrate)

    p = sub.add_parser("bench", help="timing benchmark against the brute-force baselines")
    p.add_argument("--sizes", default="1024,4096")
    p.add_argument("--kind", choices=["synthetic", "mesh"], default="synthetic")
    p.add_argument("--mesh-dir", default=None)
    p.add_argument("--f", default="poly:1,-0.5,0.25")
    p.add_argument("--d", type=int, default=1, help="field width")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--extra-edge-fraction", type=float, default=0.75,
                   help="extra random edges per vertex for the synthetic graphs")
    p.add_argument("--leaf-threshold", type=int, default=128)
    p.add_argument("--quantize", type=float, default=None)
    p.add_argument("--rff-m", type=int, default=None)
    p.add_argument("--bgfi", action="store_true", help="also time the dense graph integrator")
    p.add_argument("--oracle-guard", type=int, default=DENSE_VERTEX_GUARD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("mesh-interpolate", help="masked vertex-normal prediction on an OFF mesh")
    p.add_argument("--off", required=True)
    p.add_argument("--mask-fraction", type=float, default=0.8)
    p.add_argument("--lambda-grid", default="0.01,0.1,1,10")
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output JSON path")
    p.set_defaults(fn=cmd_mesh_interpolate)

    p = sub.add_parser("fit", help="fit a rational map from tree to graph distances")
    p.add_argument("--graph", required=True)
    p.add_argument("--degrees", default="2,2", help="numerator,denominator degrees")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output JSON path")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("eval-eps", help="relative Frobenius error of a fitted map")
    p.add_argument("--graph", required=True)
    p.add_argument("--params", required=True, help="JSON file with num/den coefficients")
    p.set_defaults(fn=cmd_eval_eps)

    p = sub.add_parser("features", help="spectral features for every edge list in a directory")
    p.add_argument("--graphs", required=True)
    p.add_argument("--f", default="poly:0,1")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(fn=cmd_features)

    p = sub.add_parser("attention-demo", help="fast vs explicit masked attention on a grid")
    p.add_argument("--grid", default="8,8", help="rows,cols")
    p.add_argument("--phi", default="square", choices=["relu", "square", "fourth", "exp"])
    p.add_argument("--g", default="exp", choices=["exp", "recip"])
    p.add_argument("--coeffs", default="0,0.5", help="a0,a1,... of the mask polynomial")
    p.add_argument("--dqk", type=int, default=8)
    p.add_argument("--dv", type=int, default=4)
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_attention_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except TreeFieldError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
