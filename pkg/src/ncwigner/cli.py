"""Command-line front end.

Every report is JSON with sorted keys and embeds the resolved configuration
and the package version, so identical inputs give byte-identical output.
Exit codes: 0 success, 1 usage error, 2 precondition or side-condition
violation, 3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import criteria as cr
from . import measures as ms
from . import starcalc as sc
from .errors import InternalInconsistency, PreconditionError
from .gausspoly import marginal, purity
from .symplectic import NCParams, build_omega, pf_sign_expected, pfaffian, planar, standard_darboux, verify_darboux


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Config


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    hbar: float
    theta: float
    eta: float
    seed: int
    format: str
    options: dict

    @property
    def params(self) -> NCParams:
        return planar(self.hbar, self.theta, self.eta)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "hbar": self.hbar,
            "theta": self.theta,
            "eta": self.eta,
            "seed": self.seed,
            "format": self.format,
            "options": self.options,
        }


_COMMON = {"command", "hbar", "theta", "eta", "seed", "format", "func"}


def _config(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in sorted(vars(ns).items()) if k not in _COMMON}
    return RunConfig(ns.command, ns.hbar, ns.theta, ns.eta, ns.seed, ns.format, opts)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _emit(cfg: RunConfig, result, out=None) -> None:
    payload = {"version": __version__, "config": cfg.to_dict(), "result": result}
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    (out or sys.stdout).write(text + "\n")


def _load_measure(path: str, cfg: RunConfig) -> ms.LabeledMeasure:
    if path == "-":
        data = json.load(sys.stdin)
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    if "result" in data and "version" in data:
        data = data["result"]
    if "measure" in data:
        data = data["measure"]
    return ms.LabeledMeasure.from_dict(data, cfg.params)


def _budget(ns) -> cr.KlmBudget:
    return cr.KlmBudget(trials=ns.trials, m_max=ns.m_max, seed=ns.seed, refine=ns.refine)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_darboux(ns, cfg: RunConfig) -> dict:
    dm = standard_darboux(cfg.hbar, cfg.theta, cfg.eta, ns.lam)
    chk = verify_darboux(dm.s, dm.form)
    out = dm.to_dict()
    out["residuals"] = {"form": chk.form_residual, "det": chk.det_residual, "ok": chk.ok}
    if cfg.format == "table":
        rows = [" ".join(f"{x: .6f}" for x in row) for row in dm.s]
        text = "S =\n" + "\n".join(rows) + f"\ndet S = {dm.det:.12g}\nPf(Omega) = {dm.form.pf:.12g}\n"
        text += f"|S J S^T - Omega| = {chk.form_residual:.3g}\n"
        return {"_table": text, **out}
    return out


def cmd_pfaffian(ns, cfg: RunConfig) -> dict:
    if ns.matrix:
        with open(ns.matrix, encoding="utf-8") as fh:
            a = np.asarray(json.load(fh), dtype=float)
        pf = pfaffian(a)
        return {"pfaffian": pf, "det": float(np.linalg.det(a)), "pf_squared_minus_det": pf**2 - float(np.linalg.det(a))}
    form = build_omega(cfg.params)
    det = float(np.linalg.det(form.omega))
    return {
        "pfaffian": form.pf,
        "det": det,
        "pf_squared_minus_det": form.pf**2 - det,
        "expected_sign": pf_sign_expected(form.d),
        "zeta": cfg.params.zeta,
    }


def _catalog_consts(ns) -> dict:
    return {k: getattr(ns, k) for k in ("a", "b", "c", "d", "alpha", "beta") if getattr(ns, k, None) is not None}


def cmd_catalog(ns, cfg: RunConfig) -> dict:
    m = ms.catalog(ns.id, cfg.params, **_catalog_consts(ns))
    out = {"measure": m.to_dict()}
    if ns.csv:
        spec = _grid_for(ns, m.fn)
        sc.to_csv(sc.sample(m.fn, spec, ns.id), ns.csv)
        out["grid"] = spec.to_dict()
        out["csv"] = ns.csv
    return out


def cmd_purity(ns, cfg: RunConfig) -> dict:
    return cr.purity_report(_load_measure(ns.descriptor, cfg)).to_dict()


def cmd_marginals(ns, cfg: RunConfig) -> dict:
    m = _load_measure(ns.descriptor, cfg)
    if m.dim != 4:
        raise PreconditionError("marginals are defined for d = 2 measures")
    pq = marginal(m.fn, [0, 1])
    pp = marginal(m.fn, [2, 3])
    rep = cr.purity_report(m)
    return {
        "position": {"function": pq.to_dict(), "purity": purity(pq), "bound": rep.theta_purity.to_dict()},
        "momentum": {"function": pp.to_dict(), "purity": purity(pp), "bound": rep.eta_purity.to_dict()},
    }


def cmd_uncertainty(ns, cfg: RunConfig) -> dict:
    m = _load_measure(ns.descriptor, cfg)
    return {
        "noncommutative": cr.uncertainty_check(m).to_dict(),
        "commutative": cr.uncertainty_check(m, commutative=True).to_dict(),
    }


def cmd_gaussian_test(ns, cfg: RunConfig) -> dict:
    m = _load_measure(ns.descriptor, cfg)
    a = cr.gaussian_form(m.fn)
    if a is None:
        from .errors import NotGaussian

        raise NotGaussian("descriptor is not a single Gaussian")
    form = build_omega(m.params)
    return {
        "quadratic_form": a.tolist(),
        "wigner": cr.gaussian_is_wigner(a, m.params.hbar).to_dict(),
        "ncwm": cr.gaussian_is_ncwm(a, form).to_dict(),
        "pure_wigner": cr.gaussian_is_pure(a, "wigner", hbar=m.params.hbar).to_dict(),
        "pure_ncwm": cr.gaussian_is_pure(a, "ncwm", form).to_dict(),
    }


def cmd_klm(ns, cfg: RunConfig) -> dict:
    m = _load_measure(ns.descriptor, cfg)
    form = build_omega(m.params)
    if ns.nc is not None:
        spec = cr.KlmSpec.noncommutative(*ns.nc)
    elif ns.nc_default:
        spec = cr.KlmSpec.noncommutative(*cr.nc_element(m.params))
    else:
        spec = cr.KlmSpec.commutative(ns.alpha if ns.alpha is not None else m.params.hbar)
    res = cr.klm_search_violation(m.fn, spec, form, ns.m_max, ns.trials, ns.seed, ns.refine)
    return {"spectrum_params": spec.to_dict(), "search": res.to_dict()}


def _grid_for(ns, *fns) -> sc.GridSpec:
    if getattr(ns, "box", None):
        return sc.GridSpec.box(ns.box, ns.npts, fns[0].dim)
    return sc.default_grid(*fns, npts=ns.npts)


def cmd_star(ns, cfg: RunConfig) -> dict:
    a = _load_measure(ns.left, cfg)
    b = _load_measure(ns.right, cfg)
    form = build_omega(a.params)
    spec = _grid_for(ns, a.fn, b.fn)
    ga, gb = sc.sample(a.fn, spec, "left"), sc.sample(b.fn, spec, "right")
    out = sc.star_product(ga, gb, form, ns.kind)
    if ns.binary:
        with open(ns.out, "wb") as fh:
            fh.write(sc.to_binary(out))
    else:
        sc.to_csv(out, ns.out)
    return {
        "grid": spec.to_dict(),
        "kind": ns.kind,
        "output": ns.out,
        "format": "ncwg" if ns.binary else "csv",
        "integral": sc.integrate_grid(out),
        "bandwidth_ratio": out.info.get("bandwidth_ratio"),
        "tail_mass": ga.info.get("tail_mass", 0.0) + gb.info.get("tail_mass", 0.0),
    }


def cmd_classify(ns, cfg: RunConfig) -> dict:
    return cr.classify(_load_measure(ns.descriptor, cfg), _budget(ns)).to_dict()


EXPECTED = {f"f{i}": f"Omega_{i}" for i in range(1, 8)}


def cmd_figure1(ns, cfg: RunConfig) -> dict:
    rows = []
    for fid in [f"f{i}" for i in range(1, 8)]:
        rep = cr.classify(ms.catalog(fid, cfg.params), _budget(ns))
        pr = rep.purity
        rows.append(
            {
                "function": fid,
                "region": rep.region,
                "certainty": rep.certainty,
                "expected": EXPECTED[fid],
                "match": rep.region == EXPECTED[fid],
                "purity": pr.purity,
                "wigner_bound": pr.wigner_bound,
                "nc_bound": pr.nc_bound,
                "theta_purity": pr.theta_purity.value if pr.theta_purity else None,
                "theta_bound": pr.theta_purity.bound if pr.theta_purity else None,
                "eta_purity": pr.eta_purity.value if pr.eta_purity else None,
                "eta_bound": pr.eta_purity.bound if pr.eta_purity else None,
                "flags": {k: v["member"] for k, v in rep.flags.items()},
            }
        )
    out = {"rows": rows, "all_match": all(r["match"] for r in rows)}
    if cfg.format == "table":
        out["_table"] = _figure1_table(rows)
    return out


def _figure1_table(rows: list[dict]) -> str:
    head = ["fn", "region", "certainty", "F^C", "F^NC", "L", "purity", "theta-purity", "eta-purity"]
    yn = {True: "yes", False: "no", None: "?"}
    body = [
        [
            r["function"],
            r["region"],
            r["certainty"],
            yn[r["flags"]["F^C"]],
            yn[r["flags"]["F^NC"]],
            yn[r["flags"]["L"]],
            f"{r['purity']:.6f}",
            f"{r['theta_purity']:.6f}",
            f"{r['eta_purity']:.6f}",
        ]
        for r in rows
    ]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    r0 = rows[0]
    foot = (
        f"bounds: 1/(2 pi hbar)^2 = {r0['wigner_bound']:.6f}, nc = {r0['nc_bound']:.6f}, "
        f"1/(2 pi theta) = {r0['theta_bound']:.6f}, 1/(2 pi eta) = {r0['eta_bound']:.6f}"
    )
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(b) for b in body] + [foot]) + "\n"


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--hbar", type=float, default=1.0)
    common.add_argument("--theta", type=float, default=0.5)
    common.add_argument("--eta", type=float, default=0.5)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")

    search = _Parser(add_help=False)
    search.add_argument("--trials", type=int, default=500)
    search.add_argument("--m-max", type=int, default=8)
    search.add_argument("--refine", type=int, default=4)

    grid = _Parser(add_help=False)
    grid.add_argument("--npts", type=int, default=64)
    grid.add_argument("--box", type=float, default=None, help="half-width of the grid box")

    p = _Parser(prog="ncwigner", description="Noncommutative Wigner measures toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("darboux", parents=[common], help="standard Darboux map")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.set_defaults(func=cmd_darboux)

    s = sub.add_parser("pfaffian", parents=[common], help="Pfaffian of Omega or of a JSON matrix")
    s.add_argument("--matrix", default=None)
    s.set_defaults(func=cmd_pfaffian)

    s = sub.add_parser("catalog", parents=[common, grid], help="catalog function descriptor")
    s.add_argument("id", choices=ms.CATALOG_IDS)
    for name in ("a", "b", "c", "d", "alpha", "beta"):
        s.add_argument(f"--{name}", type=float, default=None)
    s.add_argument("--csv", default=None, help="also sample onto a grid and write CSV here")
    s.set_defaults(func=cmd_catalog)

    for name, func, hlp in (
        ("purity", cmd_purity, "purity and marginal purities"),
        ("marginals", cmd_marginals, "position and momentum marginals"),
        ("uncertainty", cmd_uncertainty, "Robertson-Schrodinger test"),
        ("gaussian-test", cmd_gaussian_test, "exact Gaussian criteria"),
    ):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("descriptor", help="descriptor JSON path or '-'")
        s.set_defaults(func=func)

    s = sub.add_parser("klm", parents=[common, search], help="KLM violation search")
    s.add_argument("descriptor")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--nc", type=float, nargs=3, default=None, metavar=("ALPHA", "BETA", "GAMMA"))
    g.add_argument("--nc-default", action="store_true", help="use (hbar, theta, eta)/(1 - zeta)")
    s.set_defaults(func=cmd_klm)

    s = sub.add_parser("star", parents=[common, grid], help="grid star product of two descriptors")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--kind", choices=sc.STAR_KINDS, default="full")
    s.add_argument("--out", required=True)
    s.add_argument("--binary", action="store_true", help="write NCWG binary instead of CSV")
    s.set_defaults(func=cmd_star)

    s = sub.add_parser("classify", parents=[common, search], help="full evidence report")
    s.add_argument("descriptor")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("figure1", parents=[common, search], help="classify the seven catalog functions")
    s.set_defaults(func=cmd_figure1)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    cfg = _config(ns)
    threads = os.environ.get("NCWIG_THREADS")
    try:
        with sc.thread_limit(int(threads) if threads else None):
            result = ns.func(ns, cfg)
    except PreconditionError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except InternalInconsistency as exc:
        sys.stderr.write(f"internal inconsistency: {exc}\n")
        return 3
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    table = result.pop("_table", None) if isinstance(result, dict) else None
    if cfg.format == "table" and table is not None:
        sys.stdout.write(table)
    else:
        _emit(cfg, result)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
