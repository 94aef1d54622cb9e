"""Batch front end: JSON config in, deterministic CSV/JSON/SVG artifacts out.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
failure (multiplicity, singular or ill-conditioned Gramian, ...).  A
summary.json echoing the inputs and key scalars is written for every run
that gets past configuration validation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CnsmaxError, NumericalFailure, ValidationError
from .model import FluidParams, derive_constants, validate

COMMANDS = ("spectrum", "simulate", "control", "observability", "ingham",
            "lack", "stabilize")


def fmt(x) -> str:
    """Fixed 17-significant-digit scientific format (locale independent)."""
    return f"{float(x):.16e}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            cells.append(str(v) if isinstance(v, (int, np.integer)) else fmt(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True,
                               default=_json_default) + "\n")


def emit_svg_scatter(points, path: Path, title: str = "spectrum") -> None:
    """Standalone deterministic SVG scatter of complex points (Re, Im axes)."""
    pts = [(float(re), float(im)) for re, im in points]
    if not pts:
        raise ValidationError("cannot render an empty point set")
    W, H, m = 800, 600, 60
    xs = [pt[0] for pt in pts]
    ys = [pt[1] for pt in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    dx = (x1 - x0) or 1.0
    dy = (y1 - y0) or 1.0
    x0, x1 = x0 - 0.05 * dx, x1 + 0.05 * dx
    y0, y1 = y0 - 0.05 * dy, y1 + 0.05 * dy

    def sx(x):
        return m + (x - x0) / (x1 - x0) * (W - 2 * m)

    def sy(y):
        return H - m - (y - y0) / (y1 - y0) * (H - 2 * m)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{m}" y1="{H - m}" x2="{W - m}" y2="{H - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{H - m}" stroke="black"/>',
        f'<text x="{W // 2}" y="{H - 15}" font-size="14" text-anchor="middle">Re</text>',
        f'<text x="18" y="{H // 2}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 18 {H // 2})">Im</text>',
        f'<text x="{W // 2}" y="25" font-size="15" text-anchor="middle">{title}</text>',
    ]
    for i, lab in enumerate(np.linspace(x0, x1, 5)):
        px = m + i * (W - 2 * m) / 4
        parts.append(
            f'<text x="{px:.1f}" y="{H - m + 18}" font-size="10" '
            f'text-anchor="middle">{lab:.3g}</text>'
        )
    for i, lab in enumerate(np.linspace(y0, y1, 5)):
        py = H - m - i * (H - 2 * m) / 4
        parts.append(
            f'<text x="{m - 8:.1f}" y="{py:.1f}" font-size="10" '
            f'text-anchor="end">{lab:.3g}</text>'
        )
    for re, im in pts:
        parts.append(
            f'<circle cx="{sx(re):.3f}" cy="{sy(im):.3f}" r="3" '
            f'fill="steelblue" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _params_from_config(cfg) -> FluidParams:
    block = cfg.get("model")
    if not isinstance(block, dict):
        raise ValidationError("config must carry a 'model' object")
    known = {"rho_s", "u_s", "kappa", "mu", "b", "a", "gamma"}
    extra = set(block) - known
    if extra:
        raise ValidationError(f"unknown model fields: {sorted(extra)}")
    probe = argparse.Namespace(
        rho_s=block.get("rho_s"), u_s=block.get("u_s"),
        kappa=block.get("kappa"), mu=block.get("mu"),
        b=block.get("b"), a=block.get("a"), gamma=block.get("gamma"),
    )
    errs = validate(probe)
    if errs:
        raise ValidationError("; ".join(errs))
    return FluidParams(**{k: block[k] for k in block})


def _run_spectrum(p, block, out, summary):
    from .spectral import solve_beta_cubic, spectrum_rows

    n_max = int(block.get("n_max", 30))
    rows = spectrum_rows(p, n_max)
    write_csv(
        out / "spectrum.csv",
        ["n", "branch", "re_lambda", "im_lambda", "theta", "re_psi", "im_psi",
         "mult_flag"],
        rows,
    )
    pts = [(r[2], r[3]) for r in rows] + [(0.0, 0.0)]
    emit_svg_scatter(pts, out / "eigenvalues.svg",
                     title=f"eigenvalues, |n| <= {n_max}")
    roots = solve_beta_cubic(p)
    summary["n_max"] = n_max
    summary["beta"] = list(roots.beta)
    summary["omega"] = list(roots.omega)
    summary["artifacts"] = ["spectrum.csv", "eigenvalues.svg"]


def _run_simulate(p, block, out, summary, seed):
    from .dynamics import evolve, random_state, synthesize_physical

    N = int(block.get("N", 16))
    T = float(block.get("T", 5.0))
    points = int(block.get("record_points", 65))
    state0 = random_state(p, N, subspace=block.get("subspace", "Zm"), seed=seed)
    rec, final = evolve(p, state0, T, record_times=np.linspace(0, T, points))
    write_csv(
        out / "trajectory.csv",
        ["t", "energy", "norm_rho", "norm_u", "norm_S"],
        zip(rec.times, rec.energies, rec.norm_rho, rec.norm_u, rec.norm_S),
    )
    arts = ["trajectory.csv"]
    grid = int(block.get("grid", max(4 * N, 64)))
    for t_snap in block.get("snapshots", [T]):
        # exact flow to the snapshot instant
        _, snap = evolve(p, state0, float(t_snap),
                         record_times=np.array([0.0, float(t_snap)]))
        x, fields = synthesize_physical(snap, grid)
        name = f"snapshot_t{float(t_snap):g}.csv"
        write_csv(
            out / name,
            ["x", "rho", "u", "S"],
            zip(x, fields[0].real, fields[1].real, fields[2].real),
        )
        arts.append(name)
    summary["N"] = N
    summary["T"] = T
    summary["initial_energy"] = rec.energies[0]
    summary["final_energy"] = rec.energies[-1]
    summary["artifacts"] = arts


def _run_control(p, block, out, summary, seed):
    from .control import (
        synthesize_boundary_control,
        synthesize_everywhere_control,
        synthesize_localized_control,
    )
    from .dynamics import random_state

    variant = block.get("variant", "everywhere")
    N = int(block.get("N", 16))
    T = float(block.get("T", 1.0))
    summary.update({"variant": variant, "N": N, "T": T})
    if variant == "everywhere":
        state0 = random_state(p, N, subspace="Zm", seed=seed)
        sig, resid, _ = synthesize_everywhere_control(p, state0, T, N)
        cond = None
    elif variant == "boundary":
        kind = block.get("kind", "density")
        state0 = random_state(p, N, subspace="Zmm", seed=seed)
        sig, resid, cond, _ = synthesize_boundary_control(p, state0, T, N, kind)
        summary["kind"] = kind
    elif variant == "localized":
        lo, hi = block.get("interval", [0.0, np.pi])
        state0 = random_state(p, N, subspace="Zm", seed=seed)
        sig, resid, cond, _ = synthesize_localized_control(
            p, state0, T, N, (float(lo), float(hi))
        )
        summary["interval"] = [lo, hi]
    else:
        raise ValidationError(f"unknown control variant {variant!r}")

    if sig.samples.ndim == 1:
        write_csv(out / "control.csv", ["t", "re_q", "im_q"],
                  zip(sig.times, sig.samples.real, sig.samples.imag))
    else:
        header = ["t"]
        for n in sig.mode_labels:
            header += [f"re_f_{n}", f"im_f_{n}"]
        rows = []
        for k, t in enumerate(sig.times):
            row = [t]
            for i in range(len(sig.mode_labels)):
                row += [sig.samples[i, k].real, sig.samples[i, k].imag]
            rows.append(row)
        write_csv(out / "control.csv", header, rows)
    summary["residual"] = resid
    summary["control_norm"] = sig.norm_l2
    if cond is not None:
        summary["gramian_cond"] = cond
    summary["artifacts"] = ["control.csv"]


def _run_observability(p, block, out, summary):
    from .observability import (
        boundary_observability_constant,
        interior_observability_constant,
        minimal_time,
    )

    N = int(block.get("N", 8))
    T = float(block.get("T", 1.2 * minimal_time(p)))
    payload = {"N": N, "T": T}
    if "interval" in block:
        lo, hi = (float(v) for v in block["interval"])
        lmin, lmax = interior_observability_constant(p, N, T, (lo, hi))
        payload["interval"] = [lo, hi]
    else:
        kind = block.get("kind", "density")
        lmin, lmax = boundary_observability_constant(p, N, T, kind)
        payload["kind"] = kind
    payload["lambda_min"] = lmin
    payload["lambda_max"] = lmax
    payload["cond"] = lmax / lmin if lmin > 0 else float("inf")
    write_json(out / "observability.json", payload)
    summary.update(payload)
    summary["artifacts"] = ["observability.json"]


def _run_ingham(p, block, out, summary):
    from .observability import ingham_frame_bounds, minimal_time

    N = int(block.get("N", 12))
    T = float(block.get("T", 1.1 * minimal_time(p)))
    c1, c2 = ingham_frame_bounds(p, N, T)
    payload = {"N": N, "T": T, "C1_hat": c1, "C2_hat": c2,
               "T0": minimal_time(p)}
    write_json(out / "ingham.json", payload)
    summary.update(payload)
    summary["artifacts"] = ["ingham.json"]


def _run_lack(p, block, out, summary):
    from .observability import lack_experiment

    N_list = [int(v) for v in block.get("N_list", [4, 8, 16, 32])]
    lo, hi = (float(v) for v in block.get("interval", [0.0, np.pi]))
    from .spectral import solve_beta_cubic

    beta = solve_beta_cubic(p).beta
    bhat = min(abs(b) for b in beta)
    T = float(block.get("T", 0.8 * (2 * np.pi - hi) / bhat))
    res = lack_experiment(p, N_list, T, (lo, hi),
                          band_mult=int(block.get("band_mult", 4)))
    write_csv(
        out / "lack.csv",
        ["N", "ratio", "slope"],
        [(n, r, res.slope) for n, r in zip(res.N_list, res.ratios)],
    )
    summary.update({"N_list": N_list, "T": T, "interval": [lo, hi],
                    "ratios": res.ratios, "slope": res.slope})
    summary["artifacts"] = ["lack.csv"]


def _run_stabilize(p, block, out, summary, seed):
    from .dynamics import random_state
    from .stabilize import (
        build_feedback,
        closed_loop_simulate,
        fit_decay_rate,
        growth_threshold,
    )

    N = int(block.get("N", 8))
    omega = float(block.get("omega", 2.0))
    kind = block.get("kind", "density")
    T_end = float(block.get("T_end", 40.0))
    law = build_feedback(p, N, omega, kind)
    z0 = random_state(p, N, subspace="Zmm", seed=seed)
    traj = closed_loop_simulate(p, law, z0, T_end)
    nu = fit_decay_rate(traj)
    rows = zip(traj.times, traj.energies, traj.norm_rho, traj.norm_u,
               traj.norm_S, traj.control.real, traj.control.imag)
    write_csv(
        out / "trajectory.csv",
        ["t", "energy", "norm_rho", "norm_u", "norm_S", "re_q", "im_q"],
        rows,
    )
    payload = {
        "omega": omega,
        "N": N,
        "kind": kind,
        "nu_fit": nu,
        "closed_loop_abscissa": law.abscissa,
        "cond_M": law.cond_M,
        "growth_threshold": growth_threshold(p, N),
        "T_end": T_end,
    }
    if block.get("spillover", False):
        from .stabilize import spillover_report

        payload["spillover"] = spillover_report(p, law, z0, T_end)
    write_json(out / "stabilize.json", payload)
    summary.update(payload)
    summary["artifacts"] = ["stabilize.json", "trajectory.csv"]


_RUNNERS = {
    "spectrum": lambda p, b, o, s, seed: _run_spectrum(p, b, o, s),
    "simulate": _run_simulate,
    "control": _run_control,
    "observability": lambda p, b, o, s, seed: _run_observability(p, b, o, s),
    "ingham": lambda p, b, o, s, seed: _run_ingham(p, b, o, s),
    "lack": lambda p, b, o, s, seed: _run_lack(p, b, o, s),
    "stabilize": _run_stabilize,
}


def run(command: str, config_path: str, out_dir: str | None = None,
        seed: int | None = None, threads: int | None = None) -> int:
    """Execute one subcommand; returns the process exit code."""
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    try:
        cfg = json.loads(Path(config_path).read_text())
        if command not in COMMANDS:
            raise ValidationError(f"unknown command {command!r}")
        blocks = [k for k in cfg if k in COMMANDS]
        if blocks != [command]:
            raise ValidationError(
                f"config must carry exactly the {command!r} command block, "
                f"found {blocks}"
            )
        p = _params_from_config(cfg)
        block = cfg[command]
        if not isinstance(block, dict):
            raise ValidationError("command block must be an object")
        eff_seed = seed if seed is not None else int(block.get("seed", 0))
        out = Path(out_dir or cfg.get("out", "."))
        out.mkdir(parents=True, exist_ok=True)
    except (ValidationError, json.JSONDecodeError, OSError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    dc = derive_constants(p)
    summary = {
        "version": __version__,
        "command": command,
        "model": {k: v for k, v in cfg["model"].items()},
        "derived": {"b": dc.b, "big_d": dc.big_d, "inv_kappa": dc.inv_kappa},
        "seed": eff_seed,
        "status": "ok",
    }
    try:
        _RUNNERS[command](p, block, out, summary, eff_seed)
        code = 0
    except ValidationError as exc:
        summary["status"] = "validation-error"
        summary["error"] = str(exc)
        print(f"validation error: {exc}", file=sys.stderr)
        code = 2
    except (NumericalFailure, CnsmaxError) as exc:
        summary["status"] = "numerical-failure"
        summary["error"] = str(exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = 3
    write_json(out / "summary.json", summary)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="cnsmax",
        description="spectral control toolkit for the relaxed compressible "
                    "Navier-Stokes system on a periodic interval",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None,
                    help="override the command block's seed")
    ap.add_argument("--threads", type=int, default=None,
                    help="hint for BLAS thread pools")
    args = ap.parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
