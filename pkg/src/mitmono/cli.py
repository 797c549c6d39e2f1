"""Command-line pipeline.

    mitmono {spectrum,transfer,simulate,verify-mono,reconstruct} SCENARIO --out DIR

Every command writes a CSV table and a JSON report into ``DIR``. Nothing is
written unless the whole computation succeeds. Exit codes: 0 success, 2 parse
or validation error, 3 domain error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble_geometry
from .constants import SIGN_CONVENTION
from .errors import MitError, ValidationError
from .forward_time import ExponentialSource, normalized_measurement, simulate_exponential
from .geometry import ResistivityMap, cover_with_test_elements
from .imaging import ImagingConfig, MonotonicityImager, measure_anomaly
from .monotonicity import sign_convention_experiment, verify_main_theorem
from .scenario_file import (
    anomaly_support,
    csv_text,
    document_hash,
    dumps_fixed,
    parse_document,
    parse_scenario,
)
from .spectral import validity_domain
from .transfer import transfer_direct, transfer_modal


class Context:
    def __init__(self, path, workers):
        self.path = Path(path)
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read scenario: {exc.strerror}", str(path)) from exc
        self.doc = parse_document(text)
        from .scenario_file import build_scenario

        self.geo = assemble_geometry(build_scenario(self.doc), workers=workers)
        self.scenario, self.config = parse_scenario(text, assembled=self.geo)
        self.workers = workers
        self.ops = self.geo.operators(self.scenario.eta)
        run = self.doc.run
        self.sign = SIGN_CONVENTION if run.sign_convention_override is None else run.sign_convention_override

    def lambdas(self):
        if self.doc.run.lambda_samples is not None:
            return list(self.doc.run.lambda_samples)
        if self.config is not None:
            return list(self.config.lambda_samples)
        from .imaging import default_lambda_samples

        bg = ResistivityMap.uniform(self.scenario.grid, self.doc.resistivity.background)
        pole = max(validity_domain(self.geo.operators(bg).modes).lambda1,
                   validity_domain(self.ops.modes).lambda1)
        return list(default_lambda_samples(pole, self.doc.run.n_lambda))

    def provenance(self, command):
        return {
            "tool": "mitmono",
            "version": __version__,
            "command": command,
            "config_sha256": document_hash(self.doc),
            "seed": self.doc.run.seed,
            "sign_convention": self.sign,
        }


def cmd_spectrum(ctx: Context, args):
    modal = ctx.ops.modes
    rows = [(n, t, r, l) for n, (t, r, l) in enumerate(zip(modal.tau, modal.r, modal.l), start=1)]
    report = {
        "provenance": ctx.provenance("spectrum"),
        "n_loops": ctx.ops.n_c,
        "n_coils": ctx.ops.n_s,
        "lambda1": validity_domain(modal).lambda1,
        "tau": modal.tau,
    }
    return {
        "spectrum.csv": csv_text(["n", "tau_s", "r_ohm", "l_h"], rows),
        "spectrum.json": dumps_fixed(report) + "\n",
    }


def cmd_transfer(ctx: Context, args):
    dom = validity_domain(ctx.ops.modes)
    rows, mats = [], []
    for lam in ctx.lambdas():
        T = transfer_direct(ctx.ops, lam, dom, ctx.sign)
        Tm = transfer_modal(ctx.ops.modes, ctx.ops.M, lam, ctx.sign)
        agree = float(np.linalg.norm(T.H - Tm.H) / max(np.linalg.norm(T.H), np.finfo(float).tiny))
        mats.append({"lambda": lam, "H": T.H, "asymmetry": T.asymmetry, "modal_rel_diff": agree})
        for i in range(T.n_s):
            for j in range(T.n_s):
                rows.append((lam, i, j, T.H[i, j]))
    report = {"provenance": ctx.provenance("transfer"), "lambda1": dom.lambda1, "transfer": mats}
    return {
        "transfer.csv": csv_text(["lambda", "i", "j", "H"], rows),
        "transfer.json": dumps_fixed(report) + "\n",
    }


def cmd_simulate(ctx: Context, args):
    modal = ctx.ops.modes
    tau1 = modal.tau1
    lam = args.lam if args.lam is not None else 1.0 / tau1
    pattern = np.ones(ctx.ops.n_s) if args.pattern is None else np.array(args.pattern, dtype=float)
    source = ExponentialSource(lam, pattern)
    t = np.linspace(0.0, args.t_end * tau1, args.n_t)
    traj = simulate_exponential(ctx.ops, modal, source, None, t)
    vn = normalized_measurement(traj, ctx.ops)
    H = transfer_direct(ctx.ops, lam, validity_domain(modal), ctx.sign)
    target = ctx.sign * (H.H @ pattern)
    header = ["t_s"] + [f"v_{k}" for k in range(ctx.ops.n_s)] + [f"vnorm_{k}" for k in range(ctx.ops.n_s)]
    rows = [(ti, *vi, *wi) for ti, vi, wi in zip(t, traj.v, vn)]
    err = np.linalg.norm(vn - target, axis=1) / np.linalg.norm(target)
    report = {
        "provenance": ctx.provenance("simulate"),
        "lambda": lam,
        "pattern": pattern,
        "tau1": tau1,
        "limit": target,
        "final_rel_error": float(err[-1]),
    }
    return {
        "simulate.csv": csv_text(header, rows),
        "simulate.json": dumps_fixed(report) + "\n",
    }


def cmd_verify_mono(ctx: Context, args):
    grid = ctx.scenario.grid
    bg = np.full(grid.n_cells, ctx.doc.resistivity.background)
    eta = ctx.scenario.eta.values
    alpha = ctx.scenario.with_eta(ResistivityMap(np.minimum(bg, eta)))
    beta = ctx.scenario.with_eta(ResistivityMap(np.maximum(bg, eta)))
    rep = verify_main_theorem(alpha, beta, ctx.lambdas(), sign_convention=ctx.sign, assembled=ctx.geo)
    rows = [(e.lam, e.relation.value, e.min_eig_diff, e.max_eig_diff, e.tol, e.norm) for e in rep.entries]
    report = {
        "provenance": ctx.provenance("verify-mono"),
        "sign_experiment": sign_convention_experiment(),
        "pole_alpha": rep.pole_alpha,
        "pole_beta": rep.pole_beta,
        "consistent": rep.consistent,
        "relations": [r.value for r in rep.relations],
    }
    return {
        "monotonicity.csv": csv_text(["lambda", "relation", "min_eig_diff", "max_eig_diff", "tol", "norm"], rows),
        "monotonicity.json": dumps_fixed(report) + "\n",
    }


def cmd_reconstruct(ctx: Context, args):
    if ctx.config is None:
        raise ValidationError("reconstruction needs inclusions sharing one resistivity above the background",
                              "resistivity.inclusions")
    run = ctx.doc.run
    truth = anomaly_support(ctx.doc, ctx.scenario.grid)
    H_A = measure_anomaly(ctx.scenario, ctx.config.lambda_samples, run.noise_delta, run.seed,
                          assembled=ctx.geo, sign_convention=ctx.sign, relative=True)
    if run.tol is None:
        tol = [h.noise_bound for h in H_A]
    else:
        tol = [run.tol * float(np.linalg.norm(h.H, 2)) for h in H_A]
    cfg = ImagingConfig(ctx.config.eta_bg, ctx.config.eta_i, ctx.config.lambda_samples, tol,
                        ctx.config.test_elements, ctx.config.lambda_star)
    imager = MonotonicityImager(ctx.scenario, cfg, workers=ctx.workers, sign_convention=ctx.sign,
                                assembled=ctx.geo)
    candidates = None
    if run.candidates is not None:
        c = run.candidates
        candidates = cover_with_test_elements(ctx.scenario.grid, c.block_w, c.block_h, c.stride)
    res = imager.reconstruct(H_A, candidates)

    rows = []
    for table, elements in ((res.upper_table, cfg.test_elements), (res.lower_table, candidates)):
        if table is None:
            continue
        passes = table.passes()
        for j, el in enumerate(elements):
            for k, lam in enumerate(table.lambdas):
                rows.append((table.mode, j, " ".join(map(str, el.cells)), lam, table.margins[j, k],
                             table.normalized[j, k], table.thresholds[k], int(passes[j, k])))

    def cells(cs):
        return None if cs is None else list(cs.cells)

    report = {
        "provenance": ctx.provenance("reconstruct"),
        "threshold": res.threshold,
        "lambda_samples": list(cfg.lambda_samples),
        "lambda_star": cfg.lambda_samples[cfg.star_index],
        "tol": list(cfg.tol),
        "truth": cells(truth),
        "A_upper": cells(res.A_upper),
        "A_upper_star": cells(res.A_upper_star),
        "A_lower": cells(res.A_lower),
        "A_lower_star": cells(res.A_lower_star),
        "truth_subset_of_upper": truth.issubset(res.A_upper),
        "lower_subset_of_truth": None if res.A_lower is None else res.A_lower.issubset(truth),
    }
    header = ["rule", "element", "cells", "lambda", "margin", "normalized", "threshold", "pass"]
    return {
        "indicators.csv": csv_text(header, rows),
        "reconstruction.json": dumps_fixed(report) + "\n",
    }


COMMANDS = {
    "spectrum": cmd_spectrum,
    "transfer": cmd_transfer,
    "simulate": cmd_simulate,
    "verify-mono": cmd_verify_mono,
    "reconstruct": cmd_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mitmono", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"mitmono {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="worker threads for assembly and imaging")
        if name == "simulate":
            sp.add_argument("--lambda", dest="lam", type=float, default=None,
                            help="source growth rate (1/s); default 1/tau_1")
            sp.add_argument("--pattern", type=float, nargs="+", default=None,
                            help="coil current amplitudes (A); default all ones")
            sp.add_argument("--t-end", type=float, default=20.0, help="final time in units of tau_1")
            sp.add_argument("--n-t", type=int, default=201, help="number of samples")
    return p


def write_outputs(out_dir, files: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        tmp = out / (name + ".tmp")
        with open(tmp, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, out / name)


def run_command(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = Context(args.scenario, max(1, args.workers))
        files = COMMANDS[args.command](ctx, args)
    except MitError as exc:
        print(f"mitmono: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"mitmono: error: numeric failure: {exc}", file=sys.stderr)
        return 4
    write_outputs(args.out, files)
    return 0


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
