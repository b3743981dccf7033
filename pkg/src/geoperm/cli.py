"""Command-line front end.

Every analysis command runs in-process by default. With ``--server URL`` the
same request is posted to a running ``geoperm serve`` instance instead, which
keeps count tables warm between calls.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ._random import derive_seed
from .efftests import EffTestsFit, fit_effective_tests, read_pairs  # noqa: F401  (re-exported)
from .genomodel import (
    deduplicate_profiles,
    iter_trait_matrix,
    load_dataset,
    read_genotype_tsv,
    write_genotype_tsv,
    write_trait_tsv,
)
from .service import Engine, efftests_dict
from .simgen import SimConfig, simulate_genotypes, simulate_trait

logger = logging.getLogger("geoperm")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


def _alpha_arg(text: str) -> float | str:
    if text == "min":
        return "min"
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number or 'min', got {text!r}") from None
    if not 0.0 <= val <= 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in [0, 1]")
    return val


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return val


def _emit(obj, json_path: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if json_path:
        Path(json_path).write_text(text)
    sys.stdout.write(text)


def _load(args):
    g, trait = load_dataset(args.geno, args.trait, check_ids=not args.ignore_ids)
    if not args.no_dedup:
        g, _ = deduplicate_profiles(g)
    return g, trait


def _alpha(val):
    return None if val == "min" else val


def _post(server: str, route: str, payload: dict) -> dict:
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + route, json=payload, timeout=None)
    except httpx.HTTPError as exc:
        raise RuntimeError(f"cannot reach {server}: {exc}") from exc
    if resp.status_code != 200:
        raise RuntimeError(f"server returned {resp.status_code}: {resp.text}")
    return resp.json()


def _remote_dataset(args) -> dict:
    g, trait = load_dataset(args.geno, args.trait, check_ids=not args.ignore_ids)
    return {
        "genotypes": g.matrix.tolist(),
        "marker_ids": list(g.marker_ids),
        "trait": trait.values.tolist(),
        "trait_kind": trait.kind,
        "dedup": not args.no_dedup,
    }


# -- commands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = SimConfig.from_file(args.config)
    g = simulate_genotypes(cfg)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    ids = [f"ind{i + 1}" for i in range(g.n)]
    geno_path = f"{prefix}.geno.tsv"
    write_genotype_tsv(geno_path, g, ids)
    out = {"genotypes": geno_path, "n": g.n, "p": g.p}
    if args.replicates == 1:
        trait_path = f"{prefix}.trait.tsv"
        write_trait_tsv(trait_path, simulate_trait(g, cfg), ids)
        out["trait"] = trait_path
    else:
        trait_path = f"{prefix}.traits.tsv"
        with open(trait_path, "w") as fh:
            fh.write("trait_id\t" + "\t".join(ids) + "\n")
            for rep in range(args.replicates):
                vals = simulate_trait(g, cfg, replicate=rep).values
                fh.write(f"trait{rep + 1}\t" + "\t".join(repr(float(v)) for v in vals) + "\n")
        out["traits"] = trait_path
    _emit(out, args.json)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.server:
        payload = _remote_dataset(args) | {
            "alpha": args.alpha, "mode": args.mode, "t": args.t,
            "samples_per_radius": args.samples_per_radius, "seed": args.seed, "auto_permute": args.auto_permute,
        }
        _emit(_post(args.server, "/v1/estimate", payload), args.json)
        return EXIT_OK
    g, trait = _load(args)
    out = Engine().estimate_arrays(g, trait, _alpha(args.alpha), args.mode, args.t, args.samples_per_radius,
                                   args.seed, args.auto_permute)
    if "large_p_unreliable" in out["flags"] and not args.auto_permute:
        logger.warning("estimate above 0.1; a short permutation run (--auto-permute) is more reliable there")
    _emit(out, args.json)
    return EXIT_OK


def cmd_permute(args) -> int:
    if args.server:
        payload = _remote_dataset(args) | {
            "alpha": args.alpha, "max_perms": args.max_perms, "adaptive": args.adaptive, "seed": args.seed,
        }
        _emit(_post(args.server, "/v1/permute", payload), args.json)
        return EXIT_OK
    g, trait = _load(args)
    _emit(Engine().permute_arrays(g, trait, _alpha(args.alpha), args.max_perms, args.adaptive, args.seed), args.json)
    return EXIT_OK


_WORKER_ENGINE: Engine | None = None


def _compare_worker(job):
    global _WORKER_ENGINE
    if _WORKER_ENGINE is None:
        _WORKER_ENGINE = Engine()
    g, label, trait, alpha, h, seed = job
    return _WORKER_ENGINE.compare_arrays(g, trait, alpha, h, seed, label)


def _tsv_line(row: dict) -> str:
    est, perm = row["estimate"], row["permutation"]
    cells = [row["label"], repr(est["alpha"]), repr(est["estimate"]), repr(perm["p_hat"]), str(perm["n_perms"]),
             "" if row["ratio"] is None else repr(row["ratio"]), ",".join(est["flags"])]
    return "\t".join(cells)


def cmd_compare(args) -> int:
    if args.traits is None:
        if args.server:
            payload = _remote_dataset(args) | {
                "alpha": args.alpha, "samples_per_radius": args.samples_per_radius, "seed": args.seed,
            }
            _emit(_post(args.server, "/v1/compare", payload), args.json)
            return EXIT_OK
        g, trait = _load(args)
        _emit(Engine().compare_arrays(g, trait, _alpha(args.alpha), args.samples_per_radius, args.seed), args.json)
        return EXIT_OK
    if args.server:
        raise ValueError("batch compare runs in-process only")

    # batch: one trait per row, streamed; each trait gets its own seed
    g, sample_ids = read_genotype_tsv(args.geno)
    if not args.no_dedup:
        g, _ = deduplicate_profiles(g)
    traits = iter_trait_matrix(args.traits, sample_ids=None if args.ignore_ids else sample_ids)
    jobs = ((g, label, tr, _alpha(args.alpha), args.samples_per_radius, derive_seed(args.seed, i))
            for i, (label, tr) in enumerate(traits))
    tsv = open(args.tsv, "w") if args.tsv else None
    rows = []
    try:
        if tsv:
            tsv.write("label\talpha\testimate\tperm_p\tn_perms\tratio\tflags\n")
        if args.jobs > 1:
            pool = ProcessPoolExecutor(args.jobs)
            results = pool.map(_compare_worker, jobs, chunksize=1)
        else:
            pool = None
            results = map(_compare_worker, jobs)
        for row in results:
            logger.info("%s: estimate %.3g, permutation %.3g", row["label"], row["estimate"]["estimate"],
                        row["permutation"]["p_hat"])
            rows.append(row)
            if tsv:
                tsv.write(_tsv_line(row) + "\n")
                tsv.flush()
        if pool is not None:
            pool.shutdown()
    finally:
        if tsv:
            tsv.close()
    _emit(rows, args.json)
    return EXIT_OK


def cmd_efftests(args) -> int:
    pairs = read_pairs(args.pairs)
    if args.server:
        payload = {"pairs": pairs, "fit_lo": args.fit_lo, "fit_hi": args.fit_hi}
        _emit(_post(args.server, "/v1/efftests", payload), args.json)
        return EXIT_OK
    _emit(efftests_dict(pairs, args.fit_lo, args.fit_hi), args.json)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _dataset_args(p: argparse.ArgumentParser, trait_required: bool = True) -> None:
    p.add_argument("--geno", required=True, help="genotype TSV (markers by individuals)")
    p.add_argument("--trait", required=trait_required, help="trait TSV (id, value)")
    p.add_argument("--no-dedup", action="store_true", help="keep duplicate genotype profiles")
    p.add_argument("--ignore-ids", action="store_true", help="skip the individual ID order check")
    p.add_argument("--server", help="post the request to a running service at this URL")
    p.add_argument("--json", help="also write the JSON output to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoperm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated genotype and trait TSVs")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--replicates", type=_positive_int, default=1, help="traits to draw (>1 writes a trait matrix)")
    p.add_argument("--json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="geometric estimate of the permutation p-value")
    _dataset_args(p)
    p.add_argument("--alpha", type=_alpha_arg, default="min", help="nominal cutoff, or 'min' for the observed minimum")
    p.add_argument("--mode", choices=("general", "hypersphere"), default="general")
    p.add_argument("--t", type=_positive_int, help="best-partition group size (default floor(n/2))")
    p.add_argument("--samples-per-radius", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--auto-permute", action="store_true", help="run adaptive permutations when the estimate exceeds 0.1")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("permute", help="direct permutation p-value")
    _dataset_args(p)
    p.add_argument("--alpha", type=_alpha_arg, default="min")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--max-perms", type=_positive_int)
    how.add_argument("--adaptive", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("compare", help="estimate and adaptive permutation side by side")
    _dataset_args(p, trait_required=False)
    p.add_argument("--traits", help="trait matrix TSV (one trait per row) for batch mode")
    p.add_argument("--alpha", type=_alpha_arg, default="min")
    p.add_argument("--samples-per-radius", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes in batch mode")
    p.add_argument("--tsv", help="batch mode: also write one TSV row per trait")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("efftests", help="fit q = eta * p^kappa to (nominal p, permutation p) pairs")
    p.add_argument("--pairs", required=True, help="two-column TSV: nominal p, permutation p")
    p.add_argument("--fit-lo", type=float, default=1e-10)
    p.add_argument("--fit-hi", type=float, default=1e-3)
    p.add_argument("--server")
    p.add_argument("--json")
    p.set_defaults(func=cmd_efftests)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "compare" and (args.trait is None) == (args.traits is None):
        parser.error("compare needs exactly one of --trait or --traits")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"geoperm: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
