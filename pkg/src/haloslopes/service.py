"""HTTP service exposing every computation, plus the in-process dispatcher
the command line uses.

Each command has a pydantic request model.  `dispatch` validates a payload
against it and runs the computation; the FastAPI app wraps the same call.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Type, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__
from .bounds import (default_a, iterated_upper_bounds, lower_bound_constants, lower_bound_points,
                     upper_bound_point)
from .geometry import disconnect_certificate, ordinary_degree, trapped_slopes
from .newton import PreconditionError, lies_above
from .padic import INFINITY, Valuation, fmt_rational, parse_rational
from .reptheory import mackey_bruteforce, slope_budget, weyl_dim
from .upop import CertificationError, GlobalData, assemble_up, char_series, load_gallery
from .weights import WeightCharacter, is_simple, min_t_valuation, roche_subgroup, t_coordinates


class MalformedConfig(ValueError):
    """The request could not be parsed into a valid configuration."""


EXIT_OK, EXIT_PRECONDITION, EXIT_CERTIFICATION = 0, 2, 3
EXIT_UNKNOWN_COMMAND, EXIT_MALFORMED = 64, 65

Rational = Union[int, str]


def _rational(v) -> Fraction:
    try:
        return parse_rational(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {v!r}") from exc


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WeightModel(_Model):
    p: int
    t: List[int]
    conductors: List[int]
    tame: Optional[List[int]] = None
    wild_k: Optional[List[int]] = None

    def build(self) -> WeightCharacter:
        return WeightCharacter(self.p, tuple(self.t), tuple(self.conductors),
                               tuple(self.tame or ()), None if self.wild_k is None else tuple(self.wild_k))


class RocheModel(WeightModel):
    rule: Literal["auto", "max", "data"] = "auto"


class DimsModel(_Model):
    t: List[int]
    n: Optional[int] = None


class BudgetModel(_Model):
    n: int
    a: List[int]
    m: List[int]
    psi: Optional[List[Rational]] = None


class MackeyModel(RocheModel):
    budget: int = 10 ** 7


class CharpolyModel(WeightModel):
    n: Optional[int] = None
    h: int = 1
    a: Optional[List[int]] = None
    degree_cap: int = Field(ge=0)
    precision: int = Field(ge=1)
    Nmax: int = Field(ge=0)
    global_data: Optional[Union[str, Dict[str, Any]]] = None
    allow_floors: bool = False
    radius: Optional[int] = None


class LowerBoundModel(_Model):
    n: int
    p: int
    h: int = 1
    vTa: Rational
    Mmax: int = Field(ge=0)

    @field_validator("vTa")
    @classmethod
    def _vta(cls, v):
        _rational(v)
        return v


class UpperBoundModel(WeightModel):
    h: int = 1
    eps: Optional[Rational] = None


class IterateModel(UpperBoundModel):
    kmax: int = Field(ge=0)
    A1: Optional[Rational] = None


class DisconnectModel(_Model):
    alpha: Rational
    n: int
    A1: Optional[Rational] = None
    p: Optional[int] = None
    h: int = 1


class OrdinaryModel(_Model):
    valuations: List[Rational]


# -- handlers ------------------------------------------------------------------------


def _valuation_list(vals) -> List[str]:
    return [str(v) for v in vals]


def run_weight_coords(req: WeightModel) -> dict:
    w = req.build()
    vals = t_coordinates(w)
    return {"weight": w.to_json(), "t_valuations": _valuation_list(vals),
            "min_valuation": str(min_t_valuation(w)), "polydisc": list(w.tame)}


def run_roche(req: RocheModel) -> dict:
    w = req.build()
    data = roche_subgroup(w, req.rule)
    simple, fails = is_simple(w, req.rule)
    out = data.to_json()
    out.update({"index": w.p ** data.j_index, "is_simple": simple, "simple_failures": fails})
    return out


def run_dims(req: DimsModel) -> dict:
    if req.n is not None and req.n != len(req.t):
        raise PreconditionError("t must have n entries")
    return {"d_t": weyl_dim(req.t)}


def run_budget(req: BudgetModel) -> dict:
    psi = None if req.psi is None else [_rational(v) for v in req.psi]
    return slope_budget(req.n, req.a, req.m, psi).to_json()


def run_mackey(req: MackeyModel) -> dict:
    w = req.build()
    res = mackey_bruteforce(w, req.rule, req.budget)
    simple, fails = is_simple(w, req.rule)
    out = res.to_json()
    out.update({"predicted_irreducible": simple, "agrees": simple == res.irreducible,
                "j_index": roche_subgroup(w, req.rule).j_index})
    return out


def resolve_global_data(spec, h: int, n: int) -> GlobalData:
    if spec is None:
        if h == 1:
            return GlobalData()
        # h copies of the same component
        return GlobalData(h, {}, f"identity_h{h}")
    if isinstance(spec, dict):
        g = GlobalData.from_json(spec)
    else:
        gallery = load_gallery()
        if spec in gallery:
            g = gallery[spec]
        else:
            try:
                with open(spec) as fh:
                    g = GlobalData.from_json(json.load(fh))
            except OSError as exc:
                raise MalformedConfig(f"cannot read global data {spec!r}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise MalformedConfig(f"global data {spec!r} is not valid JSON: {exc}") from exc
            except ValueError as exc:
                raise MalformedConfig(str(exc)) from exc
    if g.h != h:
        raise PreconditionError(f"global data has h={g.h}, request says h={h}")
    return g


def _charpoly_core(req: CharpolyModel):
    w = req.build()
    if req.n is not None and req.n != w.n:
        raise PreconditionError("n disagrees with the weight")
    g = resolve_global_data(req.global_data, req.h, w.n)
    a = tuple(req.a) if req.a is not None else default_a(w.n)
    M = assemble_up(w, g, a, req.degree_cap, req.precision, radius=req.radius)
    cs = char_series(M, req.Nmax)
    return w, g, a, M, cs


def _guard_certified(cs, allow_floors: bool) -> None:
    if not allow_floors and cs.certified_upto() < cs.N_max:
        raise CertificationError(
            f"coefficients beyond N={cs.certified_upto()} are not certified at this truncation; "
            "raise the degree cap or precision, or pass --allow-floors")


def run_charpoly(req: CharpolyModel) -> dict:
    w, g, a, M, cs = _charpoly_core(req)
    _guard_certified(cs, req.allow_floors)
    out = cs.to_json()
    out.update({"weight": w.to_json(), "global_data": g.name, "a": list(a), "matrix_size": M.size,
                "radius": M.radius, "degree_cap": M.D, "precision": M.K})
    return out


def run_np(req: CharpolyModel) -> dict:
    w, g, a, M, cs = _charpoly_core(req)
    _guard_certified(cs, req.allow_floors)
    poly = cs.polygon(req.allow_floors)
    out = {"weight": w.to_json(), "global_data": g.name, "a": list(a), "matrix_size": M.size,
           "polygon": poly.to_json(), "certified_upto": cs.certified_upto(),
           "uses_floors": cs.certified_upto() < cs.N_max}
    vTa = min_t_valuation(w)
    if not vTa.is_infinite and 0 < vTa.value < 1:
        out["lower_bound"] = compare_lower_bound(cs, w.n, w.p, req.h, vTa.value, poly)
    else:
        out["lower_bound"] = {"vTa": str(vTa), "skipped": "v(T_a) is not in (0, 1)"}
    return out


def compare_lower_bound(cs, n: int, p: int, h: int, vTa: Fraction, poly) -> dict:
    """Compare against the lower-bound points up to N_max.

    lies_above refers to the printed polygon.  verdict is proven either way
    when possible: the certified prefix hull lies on or above the true
    polygon, and the floor envelope lies on or below it.
    """
    pts = [pt for pt in lower_bound_points(n, p, h, vTa, cs.N_max) if pt.x <= cs.N_max]
    pairs = [(pt.x, pt.y) for pt in pts]

    def check(polygon):
        ok, where = lies_above(polygon, [xy for xy in pairs if xy[0] <= polygon.length])
        return ok, None if where is None else fmt_rational(where)

    ok, where = check(poly)
    prefix_ok, prefix_where = check(cs.certified_polygon())
    env_ok, _ = check(cs.envelope(cs.N_max))
    if not prefix_ok:
        verdict = "violated"
    elif env_ok:
        verdict = "holds"
    else:
        verdict = "undecided"
    return {"vTa": fmt_rational(vTa), "points": [pt.to_json() for pt in pts], "lies_above": ok,
            "violation_x": where, "verdict": verdict,
            "violation_x_certified": prefix_where}


def run_lower_bound(req: LowerBoundModel) -> dict:
    pts = lower_bound_points(req.n, req.p, req.h, _rational(req.vTa), req.Mmax)
    A1, C = lower_bound_constants(req.n, req.p, req.h)
    return {"points": [pt.to_json() for pt in pts], "A1": fmt_rational(A1), "C": fmt_rational(C),
            "exponent": fmt_rational(1 + Fraction(2, req.n * (req.n - 1)))}


def run_upper_bound(req: UpperBoundModel) -> dict:
    eps = None if req.eps is None else _rational(req.eps)
    return upper_bound_point(req.build(), req.h, eps).to_json()


def run_iterate(req: IterateModel) -> dict:
    A1 = None if req.A1 is None else _rational(req.A1)
    res = iterated_upper_bounds(req.build(), req.h, req.kmax, A1)
    return res.to_json()


def run_disconnect(req: DisconnectModel) -> dict:
    if req.A1 is not None:
        A1 = _rational(req.A1)
    elif req.p is not None:
        A1 = lower_bound_constants(req.n, req.p, req.h)[0]
    else:
        raise PreconditionError("give A1, or p (and h) to derive it from the lower bound")
    return disconnect_certificate(_rational(req.alpha), req.n, A1).to_json()


def run_ordinary(req: OrdinaryModel) -> dict:
    vals = []
    for v in req.valuations:
        if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
            vals.append(INFINITY)
        else:
            vals.append(Valuation(_rational(v)))
    return {"ordinary_degree": ordinary_degree(vals)}


COMMANDS: Dict[str, Tuple[Type[BaseModel], Callable]] = {
    "weight-coords": (WeightModel, run_weight_coords),
    "roche": (RocheModel, run_roche),
    "dims": (DimsModel, run_dims),
    "budget": (BudgetModel, run_budget),
    "mackey": (MackeyModel, run_mackey),
    "charpoly": (CharpolyModel, run_charpoly),
    "np": (CharpolyModel, run_np),
    "lower-bound": (LowerBoundModel, run_lower_bound),
    "upper-bound": (UpperBoundModel, run_upper_bound),
    "iterate-ubd": (IterateModel, run_iterate),
    "disconnect": (DisconnectModel, run_disconnect),
    "ordinary": (OrdinaryModel, run_ordinary),
}


class UnknownCommand(KeyError):
    pass


def dispatch(command: str, payload: dict) -> dict:
    """Validate and run one command.  Raises UnknownCommand, MalformedConfig,
    PreconditionError or CertificationError."""
    if command not in COMMANDS:
        raise UnknownCommand(command)
    model, handler = COMMANDS[command]
    try:
        req = model.model_validate(payload)
    except ValidationError as exc:
        raise MalformedConfig(_short_errors(exc)) from exc
    return handler(req)


def _short_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, UnknownCommand):
        return EXIT_UNKNOWN_COMMAND
    if isinstance(exc, MalformedConfig):
        return EXIT_MALFORMED
    if isinstance(exc, CertificationError):
        return EXIT_CERTIFICATION
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    raise exc


def run_command(command: str, payload: dict) -> Tuple[int, dict]:
    """dispatch with errors folded into (exit code, JSON body)."""
    try:
        return EXIT_OK, dispatch(command, payload)
    except (UnknownCommand, MalformedConfig, CertificationError, PreconditionError) as exc:
        code = exit_code_for(exc)
        msg = exc.args[0] if isinstance(exc, UnknownCommand) else str(exc)
        return code, {"error": type(exc).__name__, "message": str(msg), "exit_code": code}


# -- HTTP ------------------------------------------------------------------------------

_HTTP_STATUS = {EXIT_OK: 200, EXIT_PRECONDITION: 422, EXIT_CERTIFICATION: 409,
                EXIT_UNKNOWN_COMMAND: 404, EXIT_MALFORMED: 400}


def create_app():
    from fastapi import Body, FastAPI
    from fastapi.responses import JSONResponse

    app = FastAPI(title="haloslopes", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/commands")
    def commands():
        return {"commands": sorted(COMMANDS)}

    @app.post("/run/{command}")
    def run(command: str, payload: dict = Body(default_factory=dict)):
        code, body = run_command(command, payload)
        return JSONResponse(body, status_code=_HTTP_STATUS[code], headers={"X-Exit-Code": str(code)})

    return app


app = create_app()


def serve(host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn
    uvicorn.run(app, host=host, port=port)
