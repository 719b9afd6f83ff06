"""Batch front-end: ``wzwmps <subcommand> --config run.json``.

Exit codes: 0 on success, 2 on a configuration or validation error, 3 when
``check`` finds a failed invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import affine_module, bounds, full_cft, intertwiner, lie_core, transfer
from .lie_core import LieError

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "run", "main"]

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3
SUBCOMMANDS = ("build-module", "correlator", "sweep", "mps-export", "fcs-export", "bounds", "check")
THREADS_ENV = "WZWMPS_THREADS"
FCS_MAX_DIM = 48


class ConfigError(ValueError):
    """Invalid configuration; ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class _Strict(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid", populate_by_name=True)


Label = Union[int, list[int]]


class InsertionConfig(_Strict):
    lam: Label = Field(alias="lambda")
    top_vector_index: int = Field(default=0, ge=0)
    channel_to: Label = 0


class GeometryConfig(_Strict):
    d: float
    d0: float = 0.0
    theta: float = 0.0
    r: float = 1.0

    @field_validator("d")
    @classmethod
    def _positive_d(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("geometry error: d must be positive so that q = exp(-d) lies in (0, 1)")
        return v

    @field_validator("r")
    @classmethod
    def _r_range(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("geometry error: r must lie in (0, 1]")
        return v


class TruncationConfig(_Strict):
    N: int = Field(default=2, ge=0)
    M: int = Field(default=0, ge=0)
    ambient: Optional[int] = Field(default=None, ge=0)


class OutputConfig(_Strict):
    format: Literal["json", "csv"] = "json"
    path: Optional[str] = None


class CouplingConfig(_Strict):
    lambda3: Label
    source: Label
    target: Label
    value: list[float] = Field(default_factory=lambda: [1.0, 0.0], min_length=2, max_length=2)


class ConstantsConfig(_Strict):
    kappa: float = math.sqrt(3.0)
    C_V: Optional[int] = Field(default=None, ge=1)
    couplings: Optional[list[CouplingConfig]] = None


class SweepConfig(_Strict):
    N: list[int] = Field(default_factory=lambda: [2, 4, 6, 8])
    M: Optional[list[int]] = None


class RunConfig(_Strict):
    algebra: str = "A1"
    k: int = Field(ge=1)
    genus: Literal[0, 1] = 0
    insertions: list[InsertionConfig] = Field(default_factory=list)
    geometry: GeometryConfig
    truncation: TruncationConfig = Field(default_factory=TruncationConfig)
    outputs: OutputConfig = Field(default_factory=OutputConfig)
    constants: ConstantsConfig = Field(default_factory=ConstantsConfig)
    sweep: Optional[SweepConfig] = None


def _pointer(loc: tuple) -> str:
    parts = []
    for p in loc:
        p = str(p)
        if p == "lam":
            p = "lambda"
        parts.append(p.replace("~", "~0").replace("/", "~1"))
    return "/" + "/".join(parts)


def parse_config(text: str) -> RunConfig:
    """Parse and validate JSON text.

    Syntax errors report line and column; schema errors report a JSON pointer.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("top-level value must be an object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and x.startswith(("function-", "int", "list["))))
        raise ConfigError(err["msg"], _pointer(loc)) from None


def serialize_config(cfg: RunConfig) -> str:
    return cfg.model_dump_json(by_alias=True, indent=2)


def _label(spec: lie_core.LieSpec, lam: Label) -> tuple[int, ...]:
    return lie_core.dynkin_label(spec, lam if isinstance(lam, int) else tuple(lam))


def validate_semantics(cfg: RunConfig) -> None:
    """Domain checks that must pass before any module is built."""
    try:
        spec = lie_core.lie_algebra(cfg.algebra)
    except LieError as exc:
        raise ConfigError(str(exc), "/algebra") from None
    for i, ins in enumerate(cfg.insertions):
        for key, lam in (("lambda", ins.lam), ("channel_to", ins.channel_to)):
            try:
                lab = _label(spec, lam)
            except LieError as exc:
                raise ConfigError(str(exc), f"/insertions/{i}/{key}") from None
            if lie_core.label_level(lab) > cfg.k:
                raise ConfigError(
                    f"admissibility rule lambda(theta) <= k violated: lambda(theta) = {lie_core.label_level(lab)} > k = {cfg.k}",
                    f"/insertions/{i}/{key}",
                )
    g = cfg.geometry
    geo = transfer.Geometry(g.d, g.d0, g.theta, g.r)
    try:
        transfer.check_domain(geo.q, geo.z(cfg.genus))
    except transfer.DomainError as exc:
        raise ConfigError(f"geometry error: {exc}", "/geometry") from None
    if cfg.genus == 1 and not g.d0 > 0:
        raise ConfigError("geometry error: genus 1 needs d0 > 0 so that |z| > 1", "/geometry/d0")


def _request(cfg: RunConfig, N: int | None = None, M: int | None = None, budget: bool = True) -> transfer.CorrRequest:
    spec = lie_core.lie_algebra(cfg.algebra)
    ins = tuple(
        transfer.Insertion(_label(spec, i.lam), i.top_vector_index, _label(spec, i.channel_to)) for i in cfg.insertions
    )
    g = cfg.geometry
    t = cfg.truncation
    return transfer.CorrRequest(
        algebra=cfg.algebra,
        k=cfg.k,
        genus=cfg.genus,
        insertions=ins,
        geometry=transfer.Geometry(g.d, g.d0, g.theta, g.r),
        N=t.N if N is None else N,
        M=t.M if M is None else M,
        ambient=t.ambient if N is None and M is None else None,
        kappa=cfg.constants.kappa,
        C_V=cfg.constants.C_V,
        budget=budget,
    )


def _correlate(req: transfer.CorrRequest) -> transfer.CorrResult:
    return transfer.genus0_correlator(req) if req.genus == 0 else transfer.genus1_correlator(req)


def _cplx(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def cmd_build_module(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    spec = lie_core.lie_algebra(cfg.algebra)
    lam = args.lam if args.lam is not None else (cfg.insertions[0].lam if cfg.insertions else 0)
    lab = _label(spec, lam)
    M = cfg.truncation.M
    mod = affine_module.build_module(spec, cfg.k, lab, M)
    out = {
        "algebra": cfg.algebra,
        "k": cfg.k,
        "lambda": list(lab),
        "M": M,
        "level_dims": mod.level_dims,
        "gram_ranks": mod.gram_ranks,
    }
    if cfg.constants.C_V is not None:
        out["dimension_bound_holds"] = all(
            d <= mod.level_dims[0] * bounds.multipartition_count(n, cfg.constants.C_V) for n, d in enumerate(mod.level_dims) if n
        )
    return out, EXIT_OK


def cmd_correlator(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    return _correlate(_request(cfg)).as_dict(), EXIT_OK


def _sweep_row(cfg: RunConfig, N: int, M: int) -> dict:
    res = _correlate(_request(cfg, N=N, M=M))
    b = res.budget
    err = (b.eps_mps0 if cfg.genus == 0 else b.eps_mps1) if b is not None else math.nan
    return {"N": N, "M": M, "value_re": res.value.real, "value_im": res.value.imag, "error_budget": err}


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> tuple[list[dict], int]:
    sw = cfg.sweep or SweepConfig()
    Ms = sw.M if sw.M is not None else [cfg.truncation.M] * len(sw.N)
    if len(Ms) != len(sw.N):
        raise ConfigError("sweep.M must have the same length as sweep.N", "/sweep/M")
    jobs = list(zip(sw.N, Ms))
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(lambda job: _sweep_row(cfg, *job), jobs))
    return rows, EXIT_OK


def _pairs(a: np.ndarray) -> list:
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def cmd_mps_export(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    req = _request(cfg, budget=False)
    bundle = transfer.mps_extract(req)
    inters = transfer.slot_intertwiners(req, max(req.M + len(req.insertions) * req.N, req.ambient or 0))
    value = bundle.contract(transfer.insertion_coefficients(req, inters)) if req.insertions else None
    tensors = [
        {"label": f"site{j}/charge{s}", "site": j, "charge": s, "matrix": _pairs(A[s])}
        for j, A in enumerate(bundle.tensors)
        for s in range(A.shape[0])
    ]
    if bundle.genus == 1:
        boundary = {"kind": "trace", "X": _pairs(bundle.X)}
    else:
        v0, vn = bundle.boundary
        boundary = {"kind": "vectors", "left": _pairs(v0), "right": _pairs(vn)}
    out = {
        "bond_dim": bundle.D,
        "site_dim": max(bundle.site_dims, default=0),
        "site_dims": bundle.site_dims,
        "tensors": tensors,
        "boundary": boundary,
        "meta": bundle.meta,
        "contracted_value": value,
    }
    return out, EXIT_OK


def _full_couplings(cfg: RunConfig, spec: lie_core.LieSpec) -> dict | None:
    if cfg.constants.couplings is None:
        return None
    chans = full_cft.integrable_labels(spec, cfg.k)
    out = full_cft.default_couplings(spec, cfg.k, chans)
    for c in cfg.constants.couplings:
        out[(_label(spec, c.lambda3), _label(spec, c.source), _label(spec, c.target))] = complex(*c.value)
    return out


def cmd_fcs_export(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    spec = lie_core.lie_algebra(cfg.algebra)
    t = cfg.truncation
    n = len(cfg.insertions)
    ambient = t.ambient if t.ambient is not None else t.M + n * t.N
    space = full_cft.FullSpace.diagonal(spec, cfg.k, ambient)
    g = cfg.geometry
    geo = transfer.Geometry(g.d, g.d0, g.theta, g.r)
    q, z = geo.q, geo.z(cfg.genus)
    cpl = _full_couplings(cfg, spec)
    D = space.matrix_dim()
    if D > FCS_MAX_DIM:
        raise ConfigError(f"fcs-export needs a full matrix dimension <= {FCS_MAX_DIM}, got {D}; lower N, M or ambient", "/truncation")
    maps = []
    for ins in cfg.insertions:
        s = ins.top_vector_index
        W = full_cft.full_scaled_truncated(space, _label(spec, ins.lam), (s, s), q, z, t.N, cpl)
        maps.append(full_cft.fcs_assemble(full_cft.transfer_map(space, W), D))
    boundary = full_cft.fcs_assemble(full_cft.transfer_map(space, np.diag(space.r_power(g.r))), D)
    vac = full_cft.upsilon(space, space.vacuum_vector())
    value = full_cft.fcs_evaluate(maps + [boundary], vac, vac)
    out = {
        "D": D,
        "channels": [list(c) for c in space.channels],
        "ambient": ambient,
        "q": q,
        "z": [z.real, z.imag],
        "vacuum_value": value,
        "maps": [
            {
                "dilation": cp.dilation,
                "choi_min_eigenvalue": cp.choi_min_eigenvalue(),
                "A": [_cplx(a) for a in cp.A],
                "B": [_cplx(b) for b in cp.B],
            }
            for cp in maps + [boundary]
        ],
    }
    return out, EXIT_OK


def _convolution_identity(n_max: int = 30, k_max: int = 4) -> bool:
    for k in range(1, k_max + 1):
        for j in range(1, k):
            for n in range(n_max + 1):
                conv = sum(bounds.multipartition_count(i, j) * bounds.multipartition_count(n - i, k - j) for i in range(n + 1))
                if conv != bounds.multipartition_count(n, k):
                    return False
    return True


def cmd_bounds(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    part = [bounds.partition_bound(n, k) for n in range(1, 61) for k in range(1, 7)]
    grid = [(a, b, round(0.05 * i, 2)) for a in range(1, 5) for b in range(1, 5) for i in range(1, 20)]
    literal = [(a, b, q, bounds.polylog_bound(a, b, q)) for a, b, q in grid]
    corrected = [bounds.polylog_bound(a, b, q, corrected=True) for a, b, q in grid]
    report: dict[str, Any] = {
        "partition_bound": {"checked": len(part), "holds": all(c.holds for c in part)},
        "polylog_bound_literal": {
            "checked": len(literal),
            "holds": all(c.holds for *_, c in literal),
            "violations": [{"a": a, "b": b, "q": q, "lhs": c.lhs, "rhs": c.rhs} for a, b, q, c in literal if not c.holds],
        },
        "polylog_bound_corrected": {"checked": len(corrected), "holds": all(c.holds for c in corrected)},
        "convolution_identity": _convolution_identity(),
    }
    req = _request(cfg)
    path = transfer.channel_path(req)
    ambient = max(req.M + len(req.insertions) * req.N, req.ambient or 0)
    q, z = req.geometry.q, req.geometry.z(req.genus)
    if req.insertions:
        mod = affine_module.build_module(req.spec, req.k, path[0], ambient) if req.genus == 1 else None
        report["budget"] = transfer._budget(req, ambient, q, z, mod).as_dict()
    mods = [affine_module.build_module(req.spec, req.k, lab, ambient) for lab in path]
    L = req.M + len(req.insertions) * req.N
    dims = [bounds.bond_dimension(m, req.M, len(req.insertions), req.N, req.C_V) for m in mods]
    report["bond_dimension"] = {"D": max(d for d, _ in dims), "bound": max((b for _, b in dims if b is not None), default=None), "level": L}
    return report, EXIT_OK


def _check_list(cfg: RunConfig, tol: float) -> list[dict]:
    spec = lie_core.lie_algebra(cfg.algebra)
    k = cfg.k
    checks: list[dict] = []

    def add(name: str, ok: bool, detail: Any = None) -> None:
        checks.append({"name": name, "pass": bool(ok), "detail": detail})

    jac = all(
        not _jacobi(spec, i, j, l) for i in range(spec.dim) for j in range(spec.dim) for l in range(spec.dim)
    )
    add("lie.jacobi", jac)
    add("lie.form_invariance", _form_invariant(spec))
    req = _request(cfg, budget=False)
    path = transfer.channel_path(req)
    n = len(req.insertions)
    Mc = min(max(cfg.truncation.M, 2), 4)
    for lab in sorted(set(path) | {_label(spec, i.lam) for i in cfg.insertions}):
        mod = affine_module.build_module(spec, k, lab, Mc)
        tag = f"module{list(lab)}"
        add(f"{tag}.gram_psd", affine_module.check_gram_psd(mod))
        add(f"{tag}.ranks_match_dims", mod.gram_ranks == mod.level_dims, mod.level_dims)
        bad = affine_module.check_commutators(mod)
        add(f"{tag}.commutators", not bad, bad[:5])
        bad = affine_module.check_adjointness(mod)
        add(f"{tag}.adjointness", not bad, bad[:5])
    for j, ins in enumerate(req.insertions):
        inter = intertwiner.build_intertwiner(spec, k, ins.lam, path[j + 1], path[j], Mc)
        rep = intertwiner.check_intertwiner(inter)
        add(f"intertwiner[{j}].commutation", rep.passed, {"checked": rep.checked, "failures": rep.failures[:5]})
        add(f"intertwiner[{j}].zero_mode", intertwiner.zero_mode_matches(inter))
        add(f"intertwiner[{j}].equivariant", inter.gmap.is_equivariant())
    if n:
        small = _request(cfg, N=1, M=min(cfg.truncation.M, 1), budget=False)
        bundle = transfer.mps_extract(small)
        inters = transfer.slot_intertwiners(small, max(small.M + n * small.N, small.ambient or 0))
        coeffs = transfer.insertion_coefficients(small, inters)
        mps = bundle.contract(coeffs)
        direct = _correlate(transfer.CorrRequest(**{**small.__dict__, "ambient": small.M + n * small.N})).raw
        add("mps.exactness", abs(mps - direct) <= tol * max(1.0, abs(direct)), {"mps": mps, "direct": direct})
    return checks


def _jacobi(spec: lie_core.LieSpec, i: int, j: int, l: int) -> dict:
    def br(x: dict, y: int) -> dict:
        out: dict = {}
        for a, c in x.items():
            for b, d in spec.bracket[a][y]:
                out[b] = out.get(b, 0) + c * d
        return {a: c for a, c in out.items() if c}

    total: dict = {}
    for a, b, c in ((i, j, l), (j, l, i), (l, i, j)):
        for key, v in br(dict(spec.bracket[a][b]), c).items():
            total[key] = total.get(key, 0) + v
    return {a: c for a, c in total.items() if c}


def _form_invariant(spec: lie_core.LieSpec) -> bool:
    for i in range(spec.dim):
        for j in range(spec.dim):
            for l in range(spec.dim):
                lhs = sum(c * spec.form[a][l] for a, c in spec.bracket[i][j])
                rhs = sum(c * spec.form[i][a] for a, c in spec.bracket[j][l])
                if lhs != rhs:
                    return False
    return True


def cmd_check(cfg: RunConfig, args: argparse.Namespace) -> tuple[dict, int]:
    checks = _check_list(cfg, args.tol)
    ok = all(c["pass"] for c in checks)
    return {"passed": ok, "tolerance": args.tol, "invariants": checks}, EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "build-module": cmd_build_module,
    "correlator": cmd_correlator,
    "sweep": cmd_sweep,
    "mps-export": cmd_mps_export,
    "fcs-export": cmd_fcs_export,
    "bounds": cmd_bounds,
    "check": cmd_check,
}


def _render(payload: Any, fmt: str) -> str:
    if fmt == "csv":
        rows = payload if isinstance(payload, list) else [payload]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else [], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (json.dumps(_jsonable(v)) if isinstance(v, (list, dict)) else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()
    return json.dumps(_jsonable(payload), indent=2) + "\n"


def _threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wzwmps", description="Truncated WZW transfer operators and MPS export.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="Path to the JSON run configuration.")
    ap.add_argument("--out", default=None, help="Output path (default: config outputs.path, else stdout).")
    ap.add_argument("--format", choices=["json", "csv"], default=None, help="Output format (default: config outputs.format).")
    ap.add_argument("--threads", type=int, default=None, help=f"Worker threads for sweeps (env {THREADS_ENV}).")
    ap.add_argument("--tol", type=float, default=1e-10, help="Tolerance for floating-point checks.")
    ap.add_argument("--lambda", dest="lam", type=int, default=None, help="Module label for build-module.")
    return ap


def run(subcommand: str, cfg: RunConfig, args: argparse.Namespace | None = None) -> tuple[Any, int]:
    """Run one subcommand on a validated config; returns ``(payload, exit_code)``."""
    if args is None:
        args = build_parser().parse_args([subcommand, "--config", "-"])
    if args.threads is None or args.threads < 1:
        args.threads = _threads(args.threads)
    validate_semantics(cfg)
    try:
        return COMMANDS[subcommand](cfg, args)
    except (LieError, transfer.DomainError, transfer.ChannelError, affine_module.TruncationError, NotImplementedError) as exc:
        raise ConfigError(f"{subcommand}: {type(exc).__name__}: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.threads = _threads(args.threads)
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text)
        payload, code = run(args.subcommand, cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    fmt = args.format or cfg.outputs.format
    text = _render(payload, fmt)
    path = args.out or cfg.outputs.path
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
