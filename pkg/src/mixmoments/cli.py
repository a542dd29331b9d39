"""
Command-line entry point.

Exit codes: 0 ok, 1 a check failed, 2 usage error, 3 numerical error,
4 data error. Every command that writes files also writes a JSON manifest
next to them; ``mixmoments replay MANIFEST`` re-runs it.
"""

import argparse
import csv
import json
import re
import sys
import time
from pathlib import Path

import numpy

from . import __version__
from .errors import EmptyDataset, MixMomentsError, ParseError

__all__ = ["main", "parse_complex", "build_parser"]

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3, 4
MIN_SAMPLES = 100
DEFAULT_R = ("1", "2", "0.5", "1+1i", "0.5+1i")

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(rf"^[+-]?(?:{_NUM})?(?:[+-]?(?:{_NUM})?i)?$")


def parse_complex(text):
    """
    Parse ``a``, ``a+bi``, ``a-bi`` or ``bi`` without spaces.

    Examples
    --------
    >>> parse_complex("2+3.5i")
    (2+3.5j)
    >>> parse_complex("-i")
    -1j
    """

    s = str(text)
    if not s or not _COMPLEX.match(s) or s in ("+", "-"):
        raise argparse.ArgumentTypeError(f"invalid complex literal {text!r}")
    try:
        return complex(s[:-1] + "j") if s.endswith("i") else complex(float(s))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid complex literal {text!r}") from None


def _format_complex(z):
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _samples(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < MIN_SAMPLES:
        raise argparse.ArgumentTypeError(f"need at least {MIN_SAMPLES} samples")
    return n


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def _fmt(x):
    if isinstance(x, (float, numpy.floating)):
        return format(float(x), ".17g")
    return x


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return str(path)


def _write_manifest(args, argv, outputs, started, extra=None):
    if not outputs:
        return None
    path = Path(outputs[0]).with_suffix(".manifest.json")
    params = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {
        "command": args.command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "outputs": outputs,
        "argv": list(argv),
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, default=str), encoding="utf-8")
    return str(path)


# ---------------
# Commands
# ---------------

def cmd_moments(args, out):
    from .haar import SamplerConfig
    from .moments import (MomentSpec, mc_mixed_moment, predict_mixed_so,
                          predict_mixed_usp)

    rs = args.r or [parse_complex(s) for s in DEFAULT_R]
    predict = predict_mixed_so if args.ensemble == "so" else predict_mixed_usp
    cfg = SamplerConfig(seed=args.seed)
    rows = []
    for r in rs:
        pred = complex(predict(args.n, r, args.phi, next_order=not args.leading,
                               variant=args.variant).total)
        spec = MomentSpec(args.ensemble, args.n, r, args.phi)
        est = mc_mixed_moment(spec, args.samples, cfg, threads=args.threads)
        zr, zi = est.zscores(pred)
        z = max(abs(zr), abs(zi))
        rows.append([_format_complex(r), pred.real, pred.imag, est.mean.real,
                     est.mean.imag, est.stderr_re, est.stderr_im, float(z)])
        print(f"r={_format_complex(r)} predicted={_format_complex(pred)} "
              f"mc={_format_complex(est.mean)} z={z:.3g}", file=out)
    header = ["r", "predicted_re", "predicted_im", "mc_re", "mc_im",
              "stderr_re", "stderr_im", "zscore"]
    return [write_csv(args.out, header, rows)], EXIT_OK, None


def cmd_identities(args, out):
    import random
    from . import identities as ident

    failed = False
    rng = random.Random(args.seed)
    for k in range(2, args.kmax + 1):
        checks = {
            "m_closed_form": ident.m_gamma_det(k) == ident.m_closed_form(k),
            "j_relation": ident.j_gamma_det(k)
            == ident.m_gamma_det(k).scaled(ident.Fraction((k - 1) * (k - 2), 2)),
            "interesting_det": k > 20 or ident.interesting_det_relation_check(k),
            "all_zero_det": ident.all_zero_det_check(k),
        }
        if k <= 8:
            exact = complex(ident.m_gamma_det(k))
            checks["barnes_form"] = (abs(ident.m_barnes_form(k) - exact)
                                     <= 1e-9 * abs(exact))
        xs = rng.sample(range(-50, 51), min(k, 12))
        checks["vandermondian"] = ident.vandermondian_check(xs)
        for name, ok in checks.items():
            failed |= not ok
            print(f"K={k} {name}: {'pass' if ok else 'FAIL'}", file=out)
    return [], EXIT_CHECK if failed else EXIT_OK, None


def cmd_ratios_check(args, out):
    from .contours import ratios_contour_so, residue_decomposition_so
    from .haar import SamplerConfig
    from .moments import mc_ratio_moment

    quad = ratios_contour_so(args.n, args.k, args.alpha, args.gamma)
    parts = residue_decomposition_so(args.n, args.k, args.alpha, args.gamma)
    total = sum(parts.values())
    print(f"contour: {_format_complex(quad)}", file=out)
    for pa, v in parts.items():
        eps = ", ".join(_format_complex(e) for e in pa.epsilon)
        print(f"  poles ({eps}): {_format_complex(v)}", file=out)
    print(f"decomposition: {_format_complex(total)}", file=out)
    rel = abs(quad - total) / max(abs(quad), 1e-300)
    ok = rel <= 1e-8
    if args.samples:
        est = mc_ratio_moment("so", args.n, args.k, args.alpha, args.gamma,
                              args.samples, SamplerConfig(seed=args.seed),
                              threads=args.threads)
        zr, zi = est.zscores(quad)
        ok &= max(abs(zr), abs(zi)) <= 3
        print(f"mc: {_format_complex(est.mean)} z=({zr:.3g}, {zi:.3g})", file=out)
    print(f"verdict: {'pass' if ok else 'FAIL'} (relative gap {rel:.3g})", file=out)
    return [], EXIT_OK if ok else EXIT_CHECK, None


def cmd_excised(args, out):
    from .excised import ExcisedConfig, excised_density_series, mc_excised_density
    from .haar import SamplerConfig

    cfg = ExcisedConfig(args.n, args.chi, bins=args.bins, n_samples=args.samples)
    mc, rate = mc_excised_density(cfg, SamplerConfig(seed=args.seed),
                                  threads=args.threads)
    series = excised_density_series(args.n, args.chi, cfg.grid(), k_max=args.kmax,
                                    normalize=True, variant=args.variant)
    dist = float(numpy.max(numpy.abs(mc.density - series.density)))
    prefix = args.out_prefix
    files = [
        write_csv(f"{prefix}_mc.csv", ["phi", "density"],
                  zip(mc.phi, mc.density)),
        write_csv(f"{prefix}_series.csv", ["phi", "density"],
                  zip(series.phi, series.density)),
    ]
    print(f"acceptance rate: {rate:.6g}", file=out)
    print(f"sup-norm distance: {dist:.6g}", file=out)
    return files, EXIT_OK, {"acceptance_rate": rate, "sup_norm": dist}


def cmd_lfun(args, out):
    from . import arithmetic as ar
    from .excised import unit_area

    if args.kmax > 0 and args.kappa is None:
        raise _Usage("--kappa is required when --kmax > 0")
    curve = ar.E11A3
    fam = (ar.read_d_list(args.dlist, curve) if args.dlist
           else ar.twist_family(args.X, curve))
    edges = numpy.linspace(0.0, args.phi_max, args.grid + 1)
    phi = 0.5 * (edges[1:] + edges[:-1])
    if args.kmax == 0:
        pred = ar.r0_density_lfun(fam, phi, curve, p_max=args.pmax)
    else:
        pred = ar.excised_prediction_lfun(fam, phi, curve, k_max=args.kmax,
                                          p_max=args.pmax, kappa=args.kappa)
    unit = unit_area(phi, pred.density)
    prefix = args.out_prefix
    files = [write_csv(f"{prefix}_prediction.csv",
                       ["phi", "density", "density_unit_area"],
                       zip(phi, pred.density, unit))]
    extra = {"family_size": len(fam)}
    print(f"family size: {len(fam)}", file=out)
    if args.zeros:
        data = ar.ingest_zero_data(args.zeros)
        hist = ar.zero_histogram(data, args.grid, args.phi_max)
        files.append(write_csv(f"{prefix}_zeros.csv", ["phi", "density"],
                               zip(hist.phi, hist.density)))
        dist = float(numpy.max(numpy.abs(hist.density - unit)))
        extra["sup_norm"] = dist
        print(f"zeros: {len(data)} records, sup-norm distance {dist:.6g}", file=out)
    return files, EXIT_OK, extra


class _Usage(Exception):
    pass


# ---------------
# Parser
# ---------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="mixmoments",
        description="Mixed moments of characteristic polynomials and "
                    "L-functions: predictions, Monte Carlo and checks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
        sp.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads; results do not depend on it")

    m = sub.add_parser("moments", help="mixed-moment table (predicted vs MC)")
    m.add_argument("--ensemble", choices=("so", "usp"), default="so")
    m.add_argument("--n", type=_positive_int, default=100)
    m.add_argument("--r", type=parse_complex, action="append",
                   help="power r, repeatable; default is 1, 2, 0.5, 1+1i and 0.5+1i")
    m.add_argument("--phi", type=parse_complex, default=complex(2, 3.5))
    m.add_argument("--samples", type=_samples, default=100_000)
    m.add_argument("--variant", choices=("printed", "consistent"), default="printed")
    m.add_argument("--leading", action="store_true",
                   help="drop the next-order term")
    m.add_argument("--out", default="moments.csv")
    common(m)
    m.set_defaults(func=cmd_moments)

    i = sub.add_parser("identities", help="exact determinant identities")
    i.add_argument("--kmax", type=int, choices=range(2, 41), metavar="{2..40}",
                   default=12)
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_identities)

    rc = sub.add_parser("ratios-check", help="finite-N ratios theorem check")
    rc.add_argument("--n", type=_positive_int, default=3)
    rc.add_argument("--k", type=int, choices=(1, 2, 3), default=2)
    rc.add_argument("--alpha", type=parse_complex, default=0.3)
    rc.add_argument("--gamma", type=parse_complex, default=0.4)
    rc.add_argument("--samples", type=int, default=0,
                    help="Monte Carlo draws; 0 skips the MC leg")
    common(rc)
    rc.set_defaults(func=cmd_ratios_check)

    e = sub.add_parser("excised", help="excised-ensemble one-level density")
    e.add_argument("--n", type=_positive_int, default=12)
    e.add_argument("--chi", type=float, default=float(numpy.log(1e-4)))
    e.add_argument("--samples", type=_samples, default=1_000_000)
    e.add_argument("--bins", type=int, default=100)
    e.add_argument("--kmax", type=int, choices=range(-1, 9), metavar="{-1..8}",
                   default=3)
    e.add_argument("--variant", choices=("printed", "consistent"), default="printed")
    e.add_argument("--out-prefix", default="excised")
    common(e)
    e.set_defaults(func=cmd_excised)

    lf = sub.add_parser("lfun", help="one-level density of quadratic twists")
    lf.add_argument("--curve", choices=("e11",), default="e11")
    lf.add_argument("--X", type=float, default=10_000.0)
    lf.add_argument("--kappa", type=float)
    lf.add_argument("--kmax", type=int, choices=range(0, 4), metavar="{0..3}",
                    default=0)
    lf.add_argument("--pmax", type=_positive_int, default=10_000)
    lf.add_argument("--phi-max", type=float, default=3.0)
    lf.add_argument("--grid", type=_positive_int, default=100)
    lf.add_argument("--zeros", help="file of 'd,gamma' records")
    lf.add_argument("--dlist", help="file of discriminants, one per line")
    lf.add_argument("--out-prefix", default="lfun")
    lf.set_defaults(func=cmd_lfun)

    rp = sub.add_parser("replay", help="re-run a command from its manifest")
    rp.add_argument("manifest")
    rp.set_defaults(func=None)
    return p


def main(argv=None, out=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command == "replay":
        try:
            doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        return main(doc["argv"], out)
    started = time.perf_counter()
    try:
        files, code, extra = args.func(args, out)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, EmptyDataset, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MixMomentsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = _write_manifest(args, argv, files, started, extra)
    for f in files + ([manifest] if manifest else []):
        print(f"wrote {f}", file=out)
    return code


if __name__ == "__main__":
    sys.exit(main())
