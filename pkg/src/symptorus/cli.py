"""Command-line entry point: ``symptorus <command> [flags]``.

Every command prints a JSON report ``{command, inputs, outputs, checks, pass}``
and exits with 0 when all checks pass, 1 when a check fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .deformation import verify_estimate, verify_proposition
from .flux import is_hamiltonian
from .grid_calculus import OneForm, field_from_dict
from .hodge import hodge_decompose
from .isotopy import Isotopy, factorize
from .metrics import d_symp, energy_e0, extended_distance, han_norm, iso_distance_D, length
from .suite import Check, FixtureSet, RunConfig, at_least, at_most, factorization_error, file_digest, run_suite

__all__ = ["build_parser", "run", "main"]

COMMANDS = ("decompose", "factorize", "length", "dist-D", "energy", "flux", "deform-verify", "dsymp", "extend-oh", "verify")


class InputError(ValueError):
    """Unreadable or malformed input; reported with exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=64, help="grid size for generated data")
    p.add_argument("--m", type=int, default=65, help="time samples for generated data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=200, help="optimizer length evaluations")
    p.add_argument("--out", type=Path, help="also write the report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symptorus", description="Symplectic isotopies on the flat torus.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="Hodge split of a closed 1-form")
    p.add_argument("--field", type=Path, required=True, help="oneform JSON")
    p.add_argument("--split-out", type=Path, help="write the HodgeSplit JSON here")

    p = sub.add_parser("factorize", help="split an isotopy into harmonic and Hamiltonian parts")
    p.add_argument("--iso", type=Path, required=True)
    p.add_argument("--rho-out", type=Path)
    p.add_argument("--psi-out", type=Path)

    p = sub.add_parser("length", help="Hofer-like length and its split")
    p.add_argument("--iso", type=Path, required=True)

    p = sub.add_parser("dist-D", help="length of the frame difference of two isotopies")
    p.add_argument("--iso", type=Path, required=True)
    p.add_argument("--iso2", type=Path, required=True)

    p = sub.add_parser("energy", help="interval estimate of the least length to the endpoint")
    p.add_argument("--iso", type=Path, required=True)
    p.add_argument("--mode", choices=("general", "hamiltonian_only"), default="general")
    p.add_argument("--candidate", type=Path, help="write the best candidate isotopy here")

    p = sub.add_parser("flux", help="flux class and lattice membership")
    p.add_argument("--iso", type=Path, required=True)

    p = sub.add_parser("deform-verify", help="deformation identities and the oscillation estimate")
    p.add_argument("--iso", type=Path, required=True, help="harmonic isotopy")
    p.add_argument("--s-samples", type=int, default=33)
    p.add_argument("--t-samples", type=int, default=33)

    p = sub.add_parser("dsymp", help="uniform image distance plus D")
    p.add_argument("--iso", type=Path, required=True)
    p.add_argument("--iso2", type=Path, required=True)

    p = sub.add_parser("extend-oh", help="flux-extended distance over the capped Hofer estimate")
    p.add_argument("--iso", type=Path, required=True)
    p.add_argument("--iso2", type=Path, required=True)
    p.add_argument("--K", type=float, default=1.0, help="cap of the base norm")

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--fixtures", type=Path, help="directory of <name>.json fixtures overriding generated ones")
    p.add_argument("--write-fixtures", type=Path, help="write the generated fixtures here and stop")
    p.add_argument("--s-samples", type=int, default=33)
    p.add_argument("--t-samples", type=int, default=33)

    for name in COMMANDS:
        _common(sub.choices[name])
    return parser


def _split_tolerances(extra: list[str]) -> dict:
    """Parse ``--tol.NAME VALUE`` and ``--tol.NAME=VALUE`` pairs."""
    tolerances = {}
    items = iter(extra)
    for item in items:
        if not item.startswith("--tol."):
            raise InputError(f"unrecognized argument: {item}")
        key, sep, value = item[len("--tol."):].partition("=")
        if not sep:
            value = next(items, None)
            if value is None:
                raise InputError(f"--tol.{key} needs a value")
        try:
            tolerances[key] = float(value)
        except ValueError as exc:
            raise InputError(f"--tol.{key}: not a number: {value!r}") from exc
    return tolerances


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


class _Inputs:
    """Loads input files and records their digests."""

    def __init__(self):
        self.digests: dict = {}

    def _record(self, name: str, path: Path) -> dict:
        obj = _read_json(path)
        self.digests[name] = {"path": str(path), "sha256": file_digest(path)}
        return obj

    def isotopy(self, name: str, path: Path) -> Isotopy:
        obj = self._record(name, path)
        if not isinstance(obj, dict):
            raise InputError(f"{path}: an isotopy must be a JSON object")
        return Isotopy.from_dict(obj)

    def oneform(self, name: str, path: Path) -> OneForm:
        obj = self._record(name, path)
        if not isinstance(obj, dict):
            raise InputError(f"{path}: a field must be a JSON object")
        field = field_from_dict(obj)
        if not isinstance(field, OneForm):
            raise InputError(f"{path}: expected a oneform field")
        return field


def _write_json(path: Path, obj, indent: Optional[int] = None) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=indent))
    return str(path)


# --- commands ------------------------------------------------------------------


def _decompose(args, cfg: RunConfig, inputs: _Inputs):
    alpha = inputs.oneform("field", args.field)
    split = hodge_decompose(alpha, cfg.tol("closed"))
    residual = np.abs(split.reconstruct().data - alpha.data).max() / (1.0 + np.abs(alpha.data).max())
    outputs = {"split": split.to_dict()}
    if args.split_out:
        outputs["split_path"] = _write_json(args.split_out, split.to_dict())
    return outputs, [at_most("hodge.reconstruction", residual, cfg.tol("hodge"))]


def _factorize(args, cfg: RunConfig, inputs: _Inputs):
    iso = inputs.isotopy("iso", args.iso)
    rho, psi = factorize(iso)
    outputs = {
        "rho_coeffs": rho.harmonic_coeffs.tolist(),
        "rho": _write_json(args.rho_out, rho.to_dict()) if args.rho_out else None,
        "psi": _write_json(args.psi_out, psi.to_dict()) if args.psi_out else None,
    }
    checks = [
        at_most("factorize.psi_exact", np.abs(psi.harmonic_coeffs).max(), cfg.tol("psi_harmonic")),
        at_most("factorize.composition", factorization_error(iso, rho, psi), cfg.tol("flow")),
    ]
    return outputs, checks


def _length(args, cfg: RunConfig, inputs: _Inputs):
    return length(inputs.isotopy("iso", args.iso)).to_dict(), []


def _dist_d(args, cfg: RunConfig, inputs: _Inputs):
    phi, psi = inputs.isotopy("iso", args.iso), inputs.isotopy("iso2", args.iso2)
    return {"D": iso_distance_D(phi, psi)}, []


def _energy(args, cfg: RunConfig, inputs: _Inputs):
    est = energy_e0(inputs.isotopy("iso", args.iso), cfg.budget, mode=args.mode)
    outputs = est.to_dict()
    outputs["candidate"] = _write_json(args.candidate, est.candidate.to_dict()) if args.candidate else None
    # the lower bound is clamped to the upper at roundoff, so this holds exactly
    return outputs, [at_most("energy.sandwich", est.lower - est.upper, 0.0)]


def _flux(args, cfg: RunConfig, inputs: _Inputs):
    report = is_hamiltonian(inputs.isotopy("iso", args.iso), cfg.tol("hamiltonian"))
    return report.to_dict(), []


def _deform_verify(args, cfg: RunConfig, inputs: _Inputs):
    rho = inputs.isotopy("iso", args.iso)
    prop = verify_proposition(rho, cfg.tol("proposition"), cfg.s_samples, cfg.t_samples)
    est = verify_estimate(rho, cfg.s_samples, cfg.t_samples, cfg.tol("estimate"))
    checks = [
        at_most("deformation.proposition", prop.residual, cfg.tol("proposition")),
        Check("deformation.estimate", est.osc_w_max, est.bound * (1.0 + cfg.tol("estimate")), est.satisfied),
    ]
    return {"proposition": prop.to_dict(), "estimate": est.to_dict()}, checks


def _dsymp(args, cfg: RunConfig, inputs: _Inputs):
    phi, psi = inputs.isotopy("iso", args.iso), inputs.isotopy("iso2", args.iso2)
    return {"d_symp": d_symp(phi, psi)}, []


def _extend_oh(args, cfg: RunConfig, inputs: _Inputs):
    if not args.K > 0:
        raise InputError("--K must be positive")
    phi, psi = inputs.isotopy("iso", args.iso), inputs.isotopy("iso2", args.iso2)

    def base_norm(iso: Isotopy) -> float:
        return han_norm(iso, args.K, cfg.budget, cfg.tol("hamiltonian"))

    value = extended_distance(phi, psi, base_norm, cfg.tol("hamiltonian"))
    return {"distance": value, "K": args.K}, [at_least("extend.nonnegative", value, 0.0)]


def _verify(args, cfg: RunConfig, inputs: _Inputs):
    if args.write_fixtures:
        paths = FixtureSet(cfg).write(args.write_fixtures)
        return {"config": cfg.to_dict(), "fixtures": [str(p) for p in paths]}, []
    checks, fx = run_suite(cfg)
    inputs.digests.update({name: fx.digests[name] for name in sorted(fx.digests)})
    return {"config": cfg.to_dict()}, checks


HANDLERS = {
    "decompose": _decompose,
    "factorize": _factorize,
    "length": _length,
    "dist-D": _dist_d,
    "energy": _energy,
    "flux": _flux,
    "deform-verify": _deform_verify,
    "dsymp": _dsymp,
    "extend-oh": _extend_oh,
    "verify": _verify,
}


def _config(args, tolerances: dict) -> RunConfig:
    fixtures_dir = getattr(args, "fixtures", None)
    if fixtures_dir is not None and not fixtures_dir.is_dir():
        raise InputError(f"fixture directory {fixtures_dir} does not exist")
    return RunConfig(
        n=args.n,
        m=args.m,
        seed=args.seed,
        budget=args.budget,
        s_samples=getattr(args, "s_samples", 33),
        t_samples=getattr(args, "t_samples", 33),
        tolerances=tolerances,
        fixtures_dir=fixtures_dir,
    )


def run(argv: Optional[list[str]] = None) -> tuple[int, Optional[dict]]:
    """Execute one command; returns the exit status and the report (``None`` on input errors)."""
    try:
        args, extra = build_parser().parse_known_args(argv)
        cfg = _config(args, _split_tolerances(extra))
        inputs = _Inputs()
        outputs, checks = HANDLERS[args.command](args, cfg, inputs)
    except ValueError as exc:  # InputError and every SymptorusError
        print(f"symptorus: error: {exc}", file=sys.stderr)
        return 2, None
    report = {
        "command": args.command,
        "inputs": inputs.digests,
        "outputs": outputs,
        "checks": [c.to_dict() for c in checks],
        "pass": all(c.passed for c in checks),
    }
    if args.out:
        _write_json(args.out, report, indent=2)
    return (0 if report["pass"] else 1), report


def main(argv: Optional[list[str]] = None) -> int:
    status, report = run(argv)
    if report is not None:
        print(json.dumps(report, indent=2))
    return status


if __name__ == "__main__":
    sys.exit(main())
