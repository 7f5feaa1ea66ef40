"""Command line interface.

Subcommands: group (validate / info / emit), catalog (list / emit),
algebra (product / term / decompose / oracle),
subgroups (classify-epi / classify-mono / complement / quotient),
experiment (lift / pansu / mvi / implicit / rank / blowup / verify-estimates).

Exit codes: 0 success, 2 validation failure, 3 solver failure,
4 semi-decision budget exhausted.  All sampled commands are deterministic
under --seed; exact-mode commands are deterministic unconditionally.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import catalog as cat
from . import io as cio
from . import metric as cmetric
from .algebra import (AlgebraVector, GroupElement, homogeneous_dimension,
                      is_stratified, validate_grading)
from .bch import bch_term, decompose_cn, group_product, series_oracle_product

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_UNDECIDED = 4


def _load_group(spec):
    """Catalog name, or path to a group-definition file."""
    if os.path.exists(spec):
        return cio.load_group(spec)
    try:
        return cat.get(spec)
    except KeyError:
        raise SystemExit("unknown group %r (not a catalog name or file)" % spec)


def _metric_for(algebra):
    spec = algebra.tags.get("metric_spec")
    if spec:
        return cmetric.HomogeneousMetric(algebra, spec["kind"],
                                         spec.get("weights") or None)
    return cmetric.default_metric(algebra)


# ---------------------------------------------------------------------------
# group / catalog
# ---------------------------------------------------------------------------

def cmd_group(args):
    if args.action == "validate":
        report, err = cio.validate_group_file(args.file)
        if err:
            print(err)
            return EXIT_VALIDATION
        print(report)
        return EXIT_OK if report.ok else EXIT_VALIDATION
    if args.action == "info":
        g = _load_group(args.file)
        print("name: %s" % g.name)
        print("dim: %d" % g.dim)
        print("step: %d" % g.step)
        print("layer dims: %s" % g.layer_dims())
        print("homogeneous dimension: %d" % homogeneous_dimension(g))
        print("stratified: %s" % is_stratified(g))
        print("grading: %s" % ("valid" if validate_grading(g).ok else "INVALID"))
        return EXIT_OK
    if args.action == "emit":
        g = cat.get(args.catalog) if args.catalog else _load_group(args.file)
        sys.stdout.write(cio.emit_group(g))
        return EXIT_OK
    raise SystemExit("unknown group action %r" % args.action)


def cmd_catalog(args):
    if args.action == "list":
        for name in cat.catalog_names():
            g = cat.get(name)
            print("%-10s dim %2d  step %d  Q %2d" %
                  (name, g.dim, g.step, homogeneous_dimension(g)))
        return EXIT_OK
    if args.action == "emit":
        sys.stdout.write(cio.emit_group(cat.get(args.name)))
        return EXIT_OK
    raise SystemExit("unknown catalog action %r" % args.action)


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def cmd_algebra(args):
    g = _load_group(args.group)
    if args.action == "product":
        x = AlgebraVector(g, cio.parse_vector(args.vectors[0], g.dim))
        y = AlgebraVector(g, cio.parse_vector(args.vectors[1], g.dim))
        p = group_product(x, y)
        check = series_oracle_product(x, y)
        if p.coords != check.coords:
            print("recursion and series oracle disagree", file=sys.stderr)
            return EXIT_VALIDATION
        print(cio.format_vector(p.coords))
        return EXIT_OK
    if args.action == "term":
        x = AlgebraVector(g, cio.parse_vector(args.vectors[0], g.dim))
        y = AlgebraVector(g, cio.parse_vector(args.vectors[1], g.dim))
        print(cio.format_vector(bch_term(args.n, x, y).coords))
        return EXIT_OK
    if args.action == "decompose":
        dec = decompose_cn(args.n, g)
        for alpha in sorted(dec.coefficients):
            print("%s %s" % ("".join(map(str, alpha)),
                             cio.format_rational(dec.coefficients[alpha])))
        return EXIT_OK
    if args.action == "oracle":
        rng = np.random.default_rng(args.seed)
        for _ in range(args.trials):
            xv = [cio.parse_rational("%d/%d" % (rng.integers(-6, 7),
                                                rng.integers(1, 5)))
                  for _ in range(g.dim)]
            yv = [cio.parse_rational("%d/%d" % (rng.integers(-6, 7),
                                                rng.integers(1, 5)))
                  for _ in range(g.dim)]
            x, y = AlgebraVector(g, xv), AlgebraVector(g, yv)
            if group_product(x, y).coords != series_oracle_product(x, y).coords:
                print("MISMATCH at x=%s y=%s" % (cio.format_vector(xv),
                                                 cio.format_vector(yv)))
                return EXIT_VALIDATION
        print("OK: %d random products agree with the series oracle" % args.trials)
        return EXIT_OK
    raise SystemExit("unknown algebra action %r" % args.action)


# ---------------------------------------------------------------------------
# subgroups
# ---------------------------------------------------------------------------

def cmd_subgroups(args):
    from . import subgroups as sg
    if args.action in ("classify-epi", "classify-mono"):
        L = cio.load_morphism(args.file, _load_group)
        if args.action == "classify-epi":
            out = sg.classify_epimorphism(L, seed=args.seed)
            print(json.dumps(out.to_json_dict(), indent=2))
            return EXIT_UNDECIDED if out.verdict == "undecided" else EXIT_OK
        out = sg.classify_monomorphism(L, seed=args.seed)
        print(json.dumps(out.to_json_dict(), indent=2))
        return EXIT_UNDECIDED if out.verdict == "undecided" else EXIT_OK
    g = _load_group(args.group)
    vectors = cio.load_subalgebra_vectors(args.file)
    try:
        sub = sg.layered_decomposition(g, vectors)
    except (sg.NotHomogeneous, sg.NotSubalgebra) as e:
        print(json.dumps({"error": str(e),
                          "witness": [str(c) for c in (e.witness or [])]}, indent=2))
        return EXIT_VALIDATION
    if args.action == "complement":
        out = sg.find_complement(sub, seed=args.seed)
        print(json.dumps(out.to_json_dict(), indent=2))
        return EXIT_UNDECIDED if out.verdict == "undecided" else EXIT_OK
    if args.action == "quotient":
        if not sg.is_ideal(sub):
            print(json.dumps({"error": "not an ideal"}, indent=2))
            return EXIT_VALIDATION
        qalg, dpi = sg.quotient(g, sub)
        out = {"quotient": cio.group_to_dict(qalg),
               "projection": [[cio.format_rational(c) for c in row]
                              for row in dpi.matrix]}
        print(json.dumps(out, indent=2))
        return EXIT_OK
    raise SystemExit("unknown subgroups action %r" % args.action)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _outpath(args, name):
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)




def _control_from_cfg(cv, g, spec):
    if "csv" in spec:
        return cv.control_from_csv(g, spec["csv"])
    return cv.make_control(g, spec["name"], **spec.get("params", {}))

def cmd_experiment(args):
    from . import curves as cv
    from . import pdiff
    with open(args.config) as f:
        cfg = json.load(f)
    seed = int(cfg.get("seed", args.seed))
    manifest = cio.RunManifest(command="experiment %s" % args.action, seed=seed)
    manifest.add_input(args.config)
    base = os.path.splitext(os.path.basename(args.config))[0]
    summary = {"experiment": args.action, "seed": seed}

    if args.action == "lift":
        g = _load_group(cfg["group"])
        control = _control_from_cfg(cv, g, cfg["control"])
        start = GroupElement(g, np.asarray(cfg.get("start", [0.0] * g.dim)))
        curve = cv.horizontal_lift(control, start, steps=int(cfg.get("steps", 512)),
                                   tol=float(cfg.get("tol", 1e-8)))
        rows = [[t] + list(c) for t, c in zip(curve.ts, curve.coords)]
        csv = cio.write_csv(_outpath(args, base + "_curve.csv"),
                            ["t"] + list(g.basis_names), rows)
        rep = cv.is_horizontal(curve, tol=float(cfg.get("check_tol", 1e-6)))
        summary.update({"endpoint": list(map(float, curve.coords[-1])),
                        "horizontal_residual": rep.max_residual,
                        "horizontal": bool(rep.ok)})
        manifest.outputs.append(csv)

    elif args.action == "pansu":
        g = _load_group(cfg["group"])
        control = _control_from_cfg(cv, g, cfg["control"])
        start = GroupElement(g, np.zeros(g.dim))
        curve = cv.horizontal_lift(control, start, steps=int(cfg.get("steps", 2048)))
        t = float(cfg.get("t", 0.5))
        scales = cfg.get("scales", [1e-1, 1e-2, 1e-3, 1e-4])
        vals = cv.pansu_quotient_norms(curve, t, scales)
        csv = cio.write_csv(_outpath(args, base + "_quotient.csv"),
                            ["h", "quotient_norm"],
                            [[h, v] for h, v in zip(scales, vals)])
        summary.update({"order": cv.decay_order(scales, vals),
                        "norms": list(map(float, vals))})
        manifest.outputs.append(csv)

    elif args.action == "mvi":
        f = pdiff.named_map(cfg["map"])
        tab = pdiff.mean_value_ratio(
            f, np.asarray(cfg["center"], dtype=float), float(cfg["r1"]),
            float(cfg["r2"]), pair_samples=int(cfg.get("pairs", 800)),
            bins=int(cfg.get("bins", 4)), seed=seed)
        csv = cio.write_csv(_outpath(args, base + "_bins.csv"),
                            ["edge", "ratio_sup", "defect_sup"],
                            [[e, r, d] for e, r, d in
                             zip(tab.bin_edges[:-1], tab.bin_sup, tab.bin_defect)])
        summary.update({"decreasing": bool(tab.decreasing()),
                        "ratio_sups": tab.bin_sup, "defect_sups": tab.bin_defect})
        manifest.outputs.append(csv)

    elif args.action == "implicit":
        f = pdiff.named_map(cfg["map"])
        try:
            sol, numerical = pdiff.implicit_function(
                f, np.asarray(cfg["base_point"], dtype=float),
                {"radius": float(cfg.get("radius", 0.3)),
                 "counts": cfg.get("counts", None) or None,
                 "shrink_attempts": int(cfg.get("shrink_attempts", 3))},
                tol=float(cfg.get("tol", 1e-10)),
                budget=int(cfg.get("budget", 100)))
        except RuntimeError as e:
            print(json.dumps({"error": str(e)}))
            return EXIT_SOLVER
        rows = [list(n) + list(p) + [r] for n, p, r in
                zip(sol.nodes, sol.phis, sol.residuals)]
        csv = cio.write_csv(_outpath(args, base + "_graph.csv"),
                            ["n%d" % i for i in range(f.domain.dim)] +
                            ["phi%d" % i for i in range(f.domain.dim)] +
                            ["residual"], rows)
        hc = sol.holder_constants()
        summary.update({"max_residual": float(np.max(sol.residuals)),
                        "numerical_kernel": bool(numerical),
                        "uniqueness": pdiff.uniqueness_check(sol, seed=seed),
                        **hc})
        manifest.outputs.append(csv)

    elif args.action == "rank":
        f = pdiff.named_map(cfg["map"])
        try:
            rp = pdiff.rank_parametrization(
                f, np.asarray(cfg["base_point"], dtype=float),
                grid_radius=float(cfg.get("radius", 0.25)),
                grid_count=int(cfg.get("count", 5)), seed=seed)
        except RuntimeError as e:
            print(json.dumps({"error": str(e)}))
            return EXIT_SOLVER
        summary.update({"lip_ratio": rp.lip_ratio,
                        "graph_sup": float(np.max(np.abs(rp.phi_points)))})

    elif args.action == "blowup":
        f = pdiff.named_map(cfg["map"])
        xbar = np.asarray(cfg["base_point"], dtype=float)
        sol, _ = pdiff.implicit_function(
            f, xbar, {"radius": float(cfg.get("radius", 0.4)),
                      "counts": cfg.get("counts", None) or None})
        sampler = pdiff.LevelSetSampler(f, xbar, sol)
        rep = pdiff.tangent_cone_samples(
            sampler, xbar, sol.kernel, cfg.get("scales", [1e-1, 1e-2, 1e-3]),
            R=float(cfg.get("R", 1.0)), count=int(cfg.get("count", 400)), seed=seed)
        csv = cio.write_csv(_outpath(args, base + "_blowup.csv"),
                            ["lambda", "hausdorff", "set_to_cone", "cone_to_set"],
                            [[l, d, a, b] for l, d, a, b in
                             zip(rep.scales, rep.distances, rep.set_to_cone,
                                 rep.cone_to_set)])
        summary.update({"decreasing": bool(rep.decreasing),
                        "final": rep.distances[-1],
                        "cone_bracket_rank":
                        pdiff.tangent_cone_bracket_rank(sol.kernel)})
        manifest.outputs.append(csv)

    elif args.action == "verify-estimates":
        g = _load_group(cfg["group"])
        m = _metric_for(g)
        nu = float(cfg.get("nu", 1.0))
        samples = int(cfg.get("samples", 2000))
        consts = collect_estimates(g, m, nu, samples, seed, args.threads)
        csv = cio.constants_csv(_outpath(args, base + "_constants.csv"), consts)
        summary.update({"constants": {c.label: c.sup_observed for c in consts}})
        manifest.outputs.append(csv)

    else:
        raise SystemExit("unknown experiment %r" % args.action)

    spath = _outpath(args, base + "_summary.json")
    with open(spath, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=float)
        f.write("\n")
    manifest.outputs.append(spath)
    manifest.write(_outpath(args, base + "_manifest.json"))
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return EXIT_OK


def collect_estimates(g, m, nu, samples, seed, threads=1):
    """All metric-estimate drivers for one group; sample batches may run on a
    thread pool (sups merge deterministically)."""
    from . import metric as mt

    def run(chunk_seed, count):
        out = []
        out.extend(mt.verify_projection_estimate(m, radius=nu, samples=count,
                                                 seed=chunk_seed))
        out.append(mt.norm_exp_estimate(m, nu=nu, samples=count, seed=chunk_seed))
        out.append(mt.left_inverse_estimate(m, nu=nu, samples=count,
                                            seed=chunk_seed))
        out.extend(mt.verify_conjugation_estimate(m, nu=nu, samples=count,
                                                  seed=chunk_seed))
        out.append(mt.verify_product_estimate(m, nu=nu, samples=max(count // 8, 50),
                                              seed=chunk_seed))
        out.append(mt.first_layer_constant(m, radius=nu, samples=count,
                                           seed=chunk_seed))
        out.append(mt.quasi_triangle_constant(m, radius=nu, samples=count,
                                              seed=chunk_seed))
        return out

    if threads <= 1:
        return run(seed, samples)
    from concurrent.futures import ThreadPoolExecutor
    per = max(samples // threads, 64)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        batches = list(ex.map(lambda k: run(seed + k, per), range(threads)))
    merged = {}
    for batch in batches:
        for c in batch:
            if c.label in merged:
                prev = merged[c.label]
                merged[c.label] = type(c)(c.label,
                                          max(prev.sup_observed, c.sup_observed),
                                          prev.samples + c.samples, c.nu)
            else:
                merged[c.label] = c
    return [merged[k] for k in sorted(merged)]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="carnot",
                                description="exact and numerical computation "
                                "on graded nilpotent Lie groups")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output-dir", default=".")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="validate / inspect / emit group files")
    g.add_argument("action", choices=["validate", "info", "emit"])
    g.add_argument("file", nargs="?", help="group file or catalog name")
    g.add_argument("--catalog", help="catalog name (for emit)")
    g.set_defaults(fn=cmd_group)

    c = sub.add_parser("catalog", help="built-in groups")
    c.add_argument("action", choices=["list", "emit"])
    c.add_argument("name", nargs="?")
    c.set_defaults(fn=cmd_catalog)

    a = sub.add_parser("algebra", help="group law and BCH terms")
    a.add_argument("action", choices=["product", "term", "decompose", "oracle"])
    a.add_argument("group")
    a.add_argument("vectors", nargs="*", help="comma-separated rationals")
    a.add_argument("-n", type=int, default=2, help="term index")
    a.add_argument("--trials", type=int, default=100)
    a.set_defaults(fn=cmd_algebra)

    s = sub.add_parser("subgroups", help="classification and factorization")
    s.add_argument("action", choices=["classify-epi", "classify-mono",
                                      "complement", "quotient"])
    s.add_argument("--group", help="ambient group (complement / quotient)")
    s.add_argument("file", help="morphism or subalgebra JSON file")
    s.set_defaults(fn=cmd_subgroups)

    e = sub.add_parser("experiment", help="run a configured experiment")
    e.add_argument("action", choices=["lift", "pansu", "mvi", "implicit",
                                      "rank", "blowup", "verify-estimates"])
    e.add_argument("config", help="experiment config JSON")
    e.set_defaults(fn=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    # seed propagates into every sampled routine for reproducibility
    np.random.seed(args.seed)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
