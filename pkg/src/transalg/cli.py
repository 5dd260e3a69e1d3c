"""Command-line front end: ``transalg {classify,monodromy,transport,integrate,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 non-central sweep endpoint,
3 numerical failure (continuity, path or evaluation errors), 4 groupoid
condition violated, 5 a requested check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import algebroid as alg
from . import groupoid as fg
from . import holonomy as hol
from . import integrator as itg
from .config import ConfigError, load_config
from .field import EvalError, ParseError
from .groups import BackendError, GroupElement, backend_from_name, is_central
from .lattice import CentralLattice, LatticeError, lattice_discreteness
from .lie import LieAlgebraError
from .selftest import run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_NONCENTRAL, EXIT_NUMERICAL, EXIT_GROUPOID, EXIT_CHECK = range(6)


class NonCentral(Exception):
    def __init__(self, payload):
        self.payload = payload


def _num(x):
    x = float(x)
    if math.isinf(x):
        return None
    return round(x, 12) + 0.0


def _coords(g: GroupElement):
    return [_num(v) for v in g.array]


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _family(spec: dict):
    spec = dict(spec)
    lam_range = spec.pop("lam_range", [0.0, 1.0])
    grid = spec.pop("grid", 101)
    threshold = spec.pop("threshold", 1e-3)
    if "preset" not in spec and "theta_s" not in spec:
        raise ConfigError("family needs a 'preset' or an explicit presentation")

    def member(lam):
        return alg.load_presentation({**spec, "lam": lam})

    return member, lam_range, grid, threshold


def cmd_classify(cfg) -> dict:
    p = alg.load_presentation(cfg.presentation)
    trace = hol.holonomy_sweep(p, cfg.steps, cfg.samples)
    c = trace.at(-1)
    central = is_central(c, cfg.tol)
    out = {"backend": p.backend.name, "c": _coords(c), "central": central, "label": p.label}
    if not central:
        raise NonCentral(out)
    return out


def cmd_monodromy(cfg) -> dict:
    if cfg.use_family:
        member, lam_range, grid, threshold = _family(cfg.family)
        v = hol.local_uniform_check(member, tuple(lam_range), grid, threshold, steps=cfg.steps)
        out = v.to_json()
        out["min_gap"] = None if out["min_gap"] is None else _num(out["min_gap"])
        out["witness"] = None if out["witness"] is None else _num(out["witness"])
        return out
    if cfg.lattice is not None:
        extra = set(cfg.lattice) - {"backend", "generators"}
        if extra:
            raise ConfigError(f"unknown lattice keys {sorted(extra)}")
        b = backend_from_name(cfg.lattice.get("backend", "Abelian(1)"))
        gens = tuple(GroupElement.of(b, np.atleast_1d(np.asarray(g, float))) for g in cfg.lattice.get("generators", []))
        lat = CentralLattice(b, gens, tol=cfg.tol)
    else:
        specs = cfg.generators if cfg.generators is not None else [cfg.presentation]
        lat = hol.monodromy_generators([alg.load_presentation(s) for s in specs], cfg.steps, cfg.tol)
    d = lattice_discreteness(lat)
    return {
        "backend": lat.backend.name,
        "generators": [_coords(g) for g in lat.generators],
        "min_gap": None if d.min_gap is None else _num(d.min_gap),
        "verdict": "discrete" if d.discrete else "non-discrete",
    }


def cmd_transport(cfg) -> str:
    p = alg.load_presentation(cfg.presentation)
    if cfg.path is None:
        return hol.holonomy_sweep(p, cfg.steps, cfg.samples).to_csv()
    extra = set(cfg.path) - {"from", "to", "points"}
    if extra:
        raise ConfigError(f"unknown path keys {sorted(extra)}")
    if "points" in cfg.path:
        path = hol.SampledPath(np.asarray(cfg.path["points"], float))
    else:
        path = hol.SampledPath.segment(cfg.path["from"], cfg.path["to"], cfg.steps)
    return hol.transport_trace(p, path).to_csv()


def cmd_integrate(cfg) -> dict:
    p = alg.load_presentation(cfg.presentation)
    rng = np.random.default_rng(cfg.seed)
    c = hol.classify_c(p, cfg.steps, cfg.samples, cfg.tol)
    lat = CentralLattice(p.backend, (c,), tol=cfg.tol)
    laws = itg.groupoid_laws(p, lat, rng, triples=cfg.arrows)
    charts = [
        itg.LocalChart(((0.2, 0.5), (0.2, 0.5)), ((0.5, 0.8), (0.5, 0.8)), bend, name=f"chart{i}")
        for i, bend in enumerate([(0.0, 0.0), (0.05, -0.05), (-0.04, 0.06)])
    ]
    pairs = [(rng.uniform(0.52, 0.78, 2), rng.uniform(0.22, 0.48, 2)) for _ in range(4)]
    coc = itg.cocycle_check(p, lat, charts, pairs)
    m = np.array([0.5, 0.5])
    loops = [hol.concat(itg.random_path(rng, q, m), itg.random_path(rng, m, q)) for q in (itg.random_point(rng) for _ in range(4))]
    iso = itg.isotropy_sample(p, lat, m, loops)
    worst = max(laws.worst(), coc.max_defect, iso.table_defect)
    return {
        "c": _coords(c),
        "cocycle": {"max_defect": _num(coc.max_defect), "triples": coc.triples},
        "isotropy": {"elements": [_coords(u) for u in iso.elements], "table_defect": _num(iso.table_defect)},
        "laws": {
            "associativity": _num(laws.associativity),
            "double_inverse": _num(laws.double_inverse),
            "inverse": _num(laws.inverse),
            "triples": laws.triples,
            "unit": _num(laws.unit),
        },
        "passed": worst <= cfg.tol,
    }


def cmd_selftest(cfg) -> dict:
    extra = fg.semidirect_data_from_json(cfg.semidirect) if cfg.semidirect is not None else None
    checks = run_selftest(cfg.seed, cfg.appendix, extra, cfg.steps, cfg.tol)
    return {"checks": [c.to_json() for c in checks], "passed": all(c.passed for c in checks)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="transalg", description="Transitive Lie algebroids over the 2-sphere.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("classify", "monodromy", "transport", "integrate", "selftest"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--steps", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--out", help="write the result here instead of stdout")
        if name == "monodromy":
            sp.add_argument("--family", action="store_true", help="scan the configured family for local uniformity")
        if name == "selftest":
            sp.add_argument("--appendix", action="store_true", help="only the exhaustive finite-groupoid suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "steps": args.steps, "tol": args.tol, "out": args.out}
    if getattr(args, "family", False):
        overrides["use_family"] = True
    if getattr(args, "appendix", False):
        overrides["appendix"] = True
    try:
        cfg = load_config(args.command, args.config, overrides)
        if args.command == "transport":
            _emit(cmd_transport(cfg), cfg.out)
            return EXIT_OK
        handler = {"classify": cmd_classify, "monodromy": cmd_monodromy, "integrate": cmd_integrate, "selftest": cmd_selftest}[args.command]
        result = handler(cfg)
        _emit(_dump(result), cfg.out)
        if result.get("passed") is False:
            return EXIT_CHECK
        return EXIT_OK
    except NonCentral as exc:
        _emit(_dump({**exc.payload, "error": "non-central sweep endpoint"}), overrides.get("out"))
        return EXIT_NONCENTRAL
    except (ConfigError, alg.PresentationError, alg.GaugeError, ParseError, LieAlgebraError, BackendError, LatticeError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except hol.NonCentralEndpoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCENTRAL
    except (fg.GroupoidError, itg.IntegratorError) as exc:
        print(f"groupoid error: {exc}", file=sys.stderr)
        return EXIT_GROUPOID
    except (hol.HolonomyError, EvalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
