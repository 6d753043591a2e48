"""Command-line entry point: ``qnonlin <command> [options]``.

Every command prints one JSON report. Exit codes: 0 success, 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, channels, config, measure, multicopy, nogo, spectrum, states
from .config import DEFAULT_MAX_OPERATOR_DIM
from .errors import NumericalError, QnonlinError, ValidationError
from .linalg import matrix_to_json

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _load_json(path: str) -> dict:
    """Parse a JSON file; a full report envelope yields its ``result``."""
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None
    if isinstance(obj, dict) and obj.get("tool") == "qnonlin":
        if "result" not in obj:
            raise ValidationError(f"{path} is an error report")
        obj = obj["result"]
    return obj


def _load_state(path: str) -> states.DensityMatrix:
    return states.state_from_json(_load_json(path))


def _load_map(spec: str, d: int | None):
    if spec.startswith("builtin:"):
        if d is None:
            raise ValidationError("--d is required for builtin maps")
        return channels.builtin(spec, d)
    return channels.map_from_json(_load_json(spec))


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_dims(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"--dims expects dA,dB, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"--dims expects integers, got {text!r}") from None


def _require_seed(args) -> int:
    if args.seed is None:
        raise ValidationError("sampling commands require an explicit --seed")
    return args.seed


# -- commands -----------------------------------------------------------------

def cmd_gen_state(args) -> dict:
    kind, d = args.kind, args.d
    if kind in ("pure", "mixed"):
        seed = _require_seed(args)
        if d is None:
            raise ValidationError("--d is required")
        rho = states.random_pure(d, seed) if kind == "pure" else states.random_mixed(d, seed)
    elif kind == "maximally-mixed":
        rho = states.maximally_mixed(d)
    elif kind == "max-entangled":
        rho = states.max_entangled(d)
    elif kind == "singlet":
        rho = states.singlet()
    elif kind == "werner":
        rho = states.werner_singlet_mixture(args.weight)
    elif kind == "reduced":
        if args.state is None or args.dims is None:
            raise ValidationError("kind reduced needs --state and --dims")
        dims = _parse_dims(args.dims)
        rho = states.reduced(_load_state(args.state), dims, [args.keep])
    elif kind == "diag":
        if args.probs is None:
            raise ValidationError("--probs is required for kind diag")
        rho = states.diagonal_state(_parse_floats(args.probs))
    else:
        raise ValidationError(f"unknown state kind {kind!r}")
    return rho.to_json()


def cmd_spa(args) -> dict:
    m = _load_map(args.map, args.d)
    if args.a is None:
        return channels.spa_optimal(m).to_json()
    k = channels.spa_at(m, args.a, args.t)
    cp, lam = channels.is_cp(k)
    tp, defect = channels.is_tp(k)
    return {
        "kind": "spa_at",
        "a": args.a,
        "t": args.t if args.t is not None else args.a * m.d_out + channels.alpha_of(m),
        "choi_min_eigenvalue": lam,
        "is_cp": cp,
        "is_tp": tp,
        "tp_defect": defect,
        "theta_bar": channels.map_to_json(k),
    }


def cmd_apply(args) -> dict:
    m = _load_map(args.map, args.d)
    rho = _load_state(args.state)
    out = {"kind": "matrix"}
    out.update(matrix_to_json(channels.apply(m, rho)))
    return out


def cmd_witness(args) -> dict:
    rho = _load_state(args.state)
    dims = _parse_dims(args.dims)
    if args.shots is not None:
        if args.q != 2:
            raise ValidationError("sampled witnesses are available for q = 2 only")
        report = measure.estimate_witness(rho, dims, args.shots, _require_seed(args), args.max_operator_dim)
    else:
        report = multicopy.witness_report(rho, dims, args.q, args.max_operator_dim)
    out = report.to_json()
    out["entropic_check"] = multicopy.entropic_separability_check(rho, dims, [args.q])
    return out


def cmd_entropy(args) -> dict:
    rho = _load_state(args.state)
    if args.kind == "tsallis":
        val = states.tsallis_entropy(rho, args.q)
    elif args.kind == "renyi":
        val = states.renyi_entropy(rho, args.q)
    else:
        val = states.von_neumann_entropy(rho)
    return {"kind": "entropy", "entropy_kind": val.kind, "order": val.order, "value": val.value}


def cmd_moments(args) -> dict:
    rho = _load_state(args.state)
    if args.shots is not None:
        mv = measure.estimate_moments_shots(rho, args.k_max, args.shots, _require_seed(args), args.max_operator_dim)
        out = mv.to_json()
        out["method"] = "shots"
        out["shots"] = args.shots
    else:
        if args.via == "shift":
            ms = [multicopy.moment(rho, k, args.max_operator_dim) for k in range(1, args.k_max + 1)]
        else:
            ms = [multicopy.exact_moment(rho, k) for k in range(1, args.k_max + 1)]
        out = spectrum.MomentVector(rho.dim, tuple(ms)).to_json()
        out["method"] = args.via
    out["observables_used"] = len(multicopy.moment_observables(rho.dim, args.k_max))
    return out


def cmd_spectrum(args) -> dict:
    if (args.moments is None) == (args.state is None):
        raise ValidationError("give exactly one of --moments or --state")
    if args.moments is not None:
        ms = _parse_floats(args.moments)
        return spectrum.estimate_spectrum(spectrum.MomentVector(len(ms), tuple(ms))).to_json()
    rho = _load_state(args.state)
    if args.shots is not None:
        return measure.spectrum_from_shots(rho, args.shots, _require_seed(args), args.max_operator_dim).to_json()
    return spectrum.spectrum_from_state(rho, args.via, args.max_operator_dim).to_json()


def _observable(name: str, d: int, n: int, max_dim: int):
    if name == "swap":
        if n != 2:
            raise ValidationError("the swap observable acts on 2 copies")
        return multicopy.swap_operator(d, max_dim)
    if name == "shift":
        return multicopy.shift_operator(d, n, max_dim)
    if name == "tsallis":
        if n != 2:
            raise ValidationError("the Tsallis observable acts on 2 copies")
        return multicopy.tsallis_observable(d, max_dim)
    if name == "identity":
        return multicopy.MulticopyObservable(n, d, np.eye(d**n), True, "identity")
    raise ValidationError(f"unknown observable {name!r}")


def cmd_measure(args) -> dict:
    seed = _require_seed(args)
    rho = _load_state(args.state)
    obs = _observable(args.observable, rho.dim, args.copies, args.max_operator_dim)
    est = measure.estimate_multicopy(obs, rho, args.shots, seed, args.max_operator_dim)
    out = est.to_json()
    out["exact"] = _jsonable(multicopy.multicopy_mean(obs, rho, args.max_operator_dim))
    return out


def cmd_nogo(args) -> dict:
    if args.nogo_command == "gap":
        if args.state is not None:
            rho = _load_state(args.state)
            if args.d is not None and args.d != rho.dim:
                raise ValidationError(f"--d {args.d} does not match state dimension {rho.dim}")
        elif args.d is not None:
            rho = states.maximally_mixed(args.d)
        else:
            raise ValidationError("give --state or --d")
        return nogo.nogo_gap(rho, args.n, args.max_operator_dim).to_json()
    return nogo.map2_linearization_check(args.d, args.trials, _require_seed(args)).to_json()


def _jsonable(x):
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    return x


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-operator-dim", type=int, default=DEFAULT_MAX_OPERATOR_DIM,
                        help="largest multicopy operator dimension to build (default 4096)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="qnonlin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qnonlin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-state", parents=[common], help="emit a density matrix")
    p.add_argument("--kind", required=True,
                   choices=["pure", "mixed", "maximally-mixed", "max-entangled", "singlet", "werner", "diag", "reduced"])
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--weight", type=float, default=1.0, help="singlet weight for kind werner")
    p.add_argument("--probs", help="comma-separated diagonal for kind diag")
    p.add_argument("--state", help="bipartite state for kind reduced")
    p.add_argument("--dims", help="dA,dB for kind reduced")
    p.add_argument("--keep", type=int, choices=[0, 1], default=0, help="subsystem kept by kind reduced")
    p.set_defaults(func=cmd_gen_state)

    p = sub.add_parser("spa", parents=[common], help="structural physical approximation of a map")
    p.add_argument("--map", required=True, help="builtin:transpose|depolarize|identity or a map JSON file")
    p.add_argument("--d", type=int)
    p.add_argument("--a", type=float, help="noise level; omit for the optimal approximation")
    p.add_argument("--t", type=float, help="normalizer for --a (default a*d_out + alpha)")
    p.set_defaults(func=cmd_spa)

    p = sub.add_parser("apply", parents=[common], help="apply a map to a state")
    p.add_argument("--map", required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("witness", parents=[common], help="multicopy entanglement witness")
    p.add_argument("--state", required=True)
    p.add_argument("--dims", required=True, help="dA,dB")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("entropy", parents=[common], help="Tsallis, Renyi or von Neumann entropy")
    p.add_argument("--state", required=True)
    p.add_argument("--kind", choices=["tsallis", "renyi", "von_neumann"], default="tsallis")
    p.add_argument("--q", type=float, default=2.0)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("moments", parents=[common], help="power moments Tr(rho^k)")
    p.add_argument("--state", required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--via", choices=["shift", "eig"], default="shift")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("spectrum", parents=[common], help="spectrum from moments")
    p.add_argument("--moments", help="comma-separated m_1..m_d")
    p.add_argument("--state")
    p.add_argument("--via", choices=["shift", "eig"], default="shift")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("measure", parents=[common], help="finite-shot multicopy measurement")
    p.add_argument("--observable", required=True, choices=["swap", "shift", "tsallis", "identity"])
    p.add_argument("--state", required=True)
    p.add_argument("--copies", type=int, default=2)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("nogo", help="no-go demonstrations")
    nsub = p.add_subparsers(dest="nogo_command", required=True)
    g = nsub.add_parser("gap", parents=[common], help="symmetric-subspace gap")
    g.add_argument("--state")
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=int, default=2)
    g.set_defaults(func=cmd_nogo)
    g = nsub.add_parser("map2", parents=[common], help="two-copy map linearization check")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--trials", type=int, default=100)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_nogo)
    return parser


def _command_name(args) -> str:
    return f"nogo {args.nogo_command}" if args.command == "nogo" else args.command


def run(argv=None) -> tuple[int, str, str | None]:
    """Execute one command.

    Returns the exit code, the serialized report and the requested output
    path (``None`` for stdout).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tolerances = config.Tolerances.from_env()
    except ValidationError as exc:
        envelope = {"tool": "qnonlin", "version": __version__, "command": _command_name(args),
                    "error": exc.to_dict()}
        return EXIT_VALIDATION, json.dumps(envelope, indent=2, sort_keys=True) + "\n", None
    previous = config.set_tolerances(tolerances)
    envelope = {
        "tool": "qnonlin",
        "version": __version__,
        "command": _command_name(args),
        "tolerances": tolerances.as_dict(),
        "max_operator_dim": args.max_operator_dim,
    }
    try:
        envelope["result"] = args.func(args)
        code = EXIT_OK
    except ValidationError as exc:
        envelope["error"] = exc.to_dict()
        code = EXIT_VALIDATION
    except NumericalError as exc:
        envelope["error"] = exc.to_dict()
        code = EXIT_NUMERICAL
    except QnonlinError as exc:
        envelope["error"] = exc.to_dict()
        code = EXIT_VALIDATION
    finally:
        config.set_tolerances(previous)
    text = json.dumps(envelope, indent=2, sort_keys=True, default=_default) + "\n"
    return code, text, args.output


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def main(argv=None) -> int:
    code, text, output = run(argv)
    if output is not None and code == EXIT_OK:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
