"""Tree-walking interpreter with an emission context.

Evaluation is strict and single-threaded; reactions, reports, and protocol
steps are accumulated on the context as side outputs of expression
evaluation, in exactly the order evaluation reached them. Species are
nominal: every `species` declaration mints a fresh id, so recursive calls
generate unbounded families of distinct species that still bind lexically.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ast_nodes as A
from . import crn as crn_mod
from . import protocol, rate_expr
from .config import RunConfig
from .crn import Complex, CrnError, General, MassAction, Network, Species
from .parser import parse
from .simulate import Observer, ObserverError, Timecourse, observe


class EvalError(Exception):
    def __init__(self, message: str, span: Optional[A.Span] = None):
        self.message = message
        self.span = span
        if span is not None:
            super().__init__(f"{span.line}:{span.column}: {message}")
        else:
            super().__init__(message)


class _Return(Exception):
    """Internal: yield unwinds to the enclosing function call."""

    def __init__(self, value):
        self.value = value


@dataclass
class Closure:
    name: str
    params: list
    body: list
    env: "Env"


@dataclass
class Builtin:
    name: str
    fn: Callable
    arity: int


class Dataset:
    """A captured timecourse: time grid plus one column per report label.
    Usable in rate expressions as d("label", t) with linear interpolation."""

    def __init__(self, times: np.ndarray, columns: dict, order: list):
        self.times = np.asarray(times, dtype=float)
        self.columns = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
        self.order = list(order)

    def interpolate(self, label: str, t: float) -> float:
        if label not in self.columns:
            raise rate_expr.RateExprError(f"dataset has no column {label!r}")
        if len(self.times) == 0:
            raise rate_expr.RateExprError("dataset is empty")
        return float(np.interp(t, self.times, self.columns[label]))

    def to_csv(self) -> str:
        from .export import format_float
        lines = [",".join(["t"] + self.order)]
        for i in range(len(self.times)):
            row = [format_float(self.times[i])]
            row += [format_float(self.columns[k][i]) for k in self.order]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: Optional["Env"] = None):
        self.vars: dict = {}
        self.parent = parent

    def lookup(self, name: str):
        env = self
        while env is not None:
            if name in env.vars:
                return env.vars[name]
            env = env.parent
        raise KeyError(name)

    def bind(self, name: str, value):
        self.vars[name] = value


@dataclass
class ReportSpec:
    observer: Observer
    span: A.Span


@dataclass
class ExecutionTrace:
    """Everything a run produced, in order."""

    timecourses: list = field(default_factory=list)  # Timecourse per equilibrate
    network: Optional[Network] = None
    samples: list = field(default_factory=list)  # all samples ever created
    protocol_log: list = field(default_factory=list)
    device: Optional[object] = None  # dmf.Device when device mode was on
    reports: list = field(default_factory=list)  # ReportSpec, emission order

    def undisposed(self) -> list:
        return [s for s in self.samples if not s.consumed]

    def serialize(self) -> str:
        """Deterministic textual serialization (used for determinism checks)."""
        from .export import timecourse_csv
        parts = []
        for i, tc in enumerate(self.timecourses):
            parts.append(f"== timecourse {i} ==\n{timecourse_csv(tc)}")
        parts.append("== protocol ==\n" + protocol.serialize_log(self.protocol_log))
        names = ", ".join(s.name for s in self.undisposed())
        parts.append(f"== undisposed == {names}\n")
        return "".join(parts)


class EmissionContext:
    """Mutable state threaded through one execution."""

    def __init__(self, config: RunConfig, device=None):
        self.config = config
        self.network = Network()
        self.vessel = protocol.new_sample(
            "vessel", config.vessel_volume_ul, config.vessel_temperature_k,
            lna=config.lna)
        self.current_sample = self.vessel
        self.reports: list = []  # ReportSpec
        self.trace = ExecutionTrace(network=self.network)
        self.trace.samples.append(self.vessel)
        self.device = device
        self.depth = 0
        self.emissions = 0

    def log_step(self, op, inputs, outputs, **params):
        step = protocol.ProtocolStep(op, inputs, outputs, params)
        self.trace.protocol_log.append(step)
        return step


# --- public API ------------------------------------------------------------

def eval_program(ast: A.Program, config: Optional[RunConfig] = None) -> ExecutionTrace:
    config = config or RunConfig()
    # runs are sequential end-to-end; restarting the id counters makes the
    # species/sample ids in artifacts identical across repeated runs
    crn_mod._species_counter = 0
    protocol._sample_counter = 0
    device = None
    if config.device_enabled:
        from .dmf import Device
        device = Device(config.device)
    ctx = EmissionContext(config, device)
    env = Env()
    _install_builtins(env, ctx)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20 * min(config.recursion_limit, 40_000) + 1000))
    try:
        _exec_block(ast.statements, env, ctx)
    finally:
        sys.setrecursionlimit(old_limit)
    if device is not None:
        ctx.trace.device = device
    return ctx.trace


def run_source(source: str, config: Optional[RunConfig] = None) -> ExecutionTrace:
    return eval_program(parse(source), config)


def fresh_species(ctx: EmissionContext, base_name: str, initial: float,
                  span: Optional[A.Span] = None) -> Species:
    if initial < 0:
        raise EvalError(f"negative initial concentration {initial} for species "
                        f"'{base_name}'", span)
    sp = ctx.network.add_species(base_name)
    ctx.network.set_initial(sp.id, initial)
    ctx.current_sample.set_conc(sp.id, initial)
    return sp


def emit_report(ctx: EmissionContext, kind: str, expr: rate_expr.Node,
                label: str, span: Optional[A.Span] = None):
    ctx.reports.append(ReportSpec(Observer(kind, expr, label), span))
    ctx.trace.reports.append(ctx.reports[-1])


def capture_timecourse(trace: ExecutionTrace, index: int) -> Dataset:
    if not (0 <= index < len(trace.timecourses)):
        raise EvalError(
            f"capture index {index} out of range ({len(trace.timecourses)} "
            "completed equilibrations)")
    tc = trace.timecourses[index]
    return Dataset(tc.times, dict(tc.observers), list(tc.observer_order))


# --- statement execution ---------------------------------------------------

def _exec_block(stmts, env: Env, ctx: EmissionContext):
    for s in stmts:
        _exec_stmt(s, env, ctx)


def _exec_stmt(s, env: Env, ctx: EmissionContext):
    if isinstance(s, A.SpeciesDecl):
        initial = 0.0
        if s.initial is not None:
            initial = _need_number(_eval(s.initial, env, ctx), s.initial)
        sp = fresh_species(ctx, s.name, initial, s.span)
        env.bind(s.name, sp)
    elif isinstance(s, A.ReactionStmt):
        _emit_reaction(s, env, ctx)
    elif isinstance(s, A.FunctionDef):
        clo = Closure(s.name, s.params, s.body, env)
        env.bind(s.name, clo)
    elif isinstance(s, A.Let):
        env.bind(s.name, _eval(s.value, env, ctx))
    elif isinstance(s, A.IfStmt):
        cond = _eval(s.condition, env, ctx)
        if not isinstance(cond, bool):
            raise EvalError("condition must be a boolean", s.condition.span)
        if cond:
            _exec_block(s.then_body, Env(env), ctx)
        elif s.else_body is not None:
            _exec_block(s.else_body, Env(env), ctx)
    elif isinstance(s, A.ForStmt):
        lo = _need_number(_eval(s.start, env, ctx), s.start)
        hi = _need_number(_eval(s.stop, env, ctx), s.stop)
        i = int(lo)
        while i < hi:
            body_env = Env(env)
            body_env.bind(s.var, float(i))
            _exec_block(s.body, body_env, ctx)
            i += 1
    elif isinstance(s, A.YieldStmt):
        raise _Return(_eval(s.value, env, ctx))
    elif isinstance(s, A.ReportStmt):
        _emit_report_stmt(s, env, ctx)
    elif isinstance(s, A.EquilibrateStmt):
        _exec_equilibrate(s, env, ctx)
    elif isinstance(s, A.SampleStmt):
        _exec_sample(s, env, ctx)
    elif isinstance(s, A.MixStmt):
        _exec_mix(s, env, ctx)
    elif isinstance(s, A.SplitStmt):
        _exec_split(s, env, ctx)
    elif isinstance(s, A.DisposeStmt):
        smp = _need_sample(_eval(s.value, env, ctx), s.value)
        try:
            protocol.dispose(smp)
        except protocol.ProtocolError as exc:
            raise EvalError(str(exc), s.span) from exc
        ctx.log_step("dispose", [smp.id], [])
        if ctx.device is not None:
            ctx.device.dispose(smp.id)
    elif isinstance(s, A.ExprStmt):
        _eval(s.value, env, ctx)
    elif isinstance(s, (A.VolumeStmt, A.TemperatureStmt)):
        raise EvalError("volume/temperature only allowed inside a sample block",
                        s.span)
    else:
        raise EvalError(f"cannot execute {type(s).__name__}", s.span)


def _emit_reaction(s: A.ReactionStmt, env: Env, ctx: EmissionContext):
    reagents = _resolve_complex(s.reagents, env, ctx)
    products = _resolve_complex(s.products, env, ctx)
    rates = []
    if s.rate.general:
        node = compile_rate_expr(s.rate.exprs[0], env, ctx)
        rates.append(General(node))
    else:
        for e in s.rate.exprs:
            k = _need_number(_eval(e, env, ctx), e)
            if k < 0:
                raise EvalError(f"rate constant must be >= 0, got {k}", e.span)
            rates.append(MassAction(k))
    ctx.emissions += 1
    if ctx.emissions > ctx.config.emission_limit:
        raise EvalError(
            f"emission limit exceeded ({ctx.config.emission_limit} reactions)",
            s.span)
    try:
        ctx.network.add_reaction(reagents, products, rates[0])
        if s.reversible:
            ctx.network.add_reaction(products, reagents, rates[1])
    except CrnError as exc:
        raise EvalError(str(exc), s.span) from exc


def _resolve_complex(c: A.ComplexAst, env: Env, ctx: EmissionContext) -> Complex:
    entries: dict[int, int] = {}
    for term in c.terms:
        try:
            val = env.lookup(term.name)
        except KeyError:
            raise EvalError(f"unknown species '{term.name}'", term.span) from None
        if not isinstance(val, Species):
            raise EvalError(f"'{term.name}' is not a species", term.span)
        entries[val.id] = entries.get(val.id, 0) + term.multiplicity
    return Complex(entries)


_OBSERVER_KINDS = ("var", "sd", "cv", "fano")


def _emit_report_stmt(s: A.ReportStmt, env: Env, ctx: EmissionContext):
    expr = s.value
    kind = "mean"
    if (isinstance(expr, A.Call) and isinstance(expr.callee, A.Var)
            and expr.callee.name in _OBSERVER_KINDS
            and not _is_bound(env, expr.callee.name)):
        if len(expr.args) != 1:
            raise EvalError(f"{expr.callee.name}() takes one argument", expr.span)
        kind = expr.callee.name
        inner = expr.args[0]
    else:
        inner = expr
    node = compile_rate_expr(inner, env, ctx)
    label = s.label
    if label is None:
        from .formatter import _expr as fmt_expr
        label = fmt_expr(expr)
        # render species operands by display name for readability
        label = _label_with_display_names(expr, env, label)
    emit_report(ctx, kind, node, label, s.span)


def _label_with_display_names(expr, env, fallback: str) -> str:
    if isinstance(expr, A.Var):
        try:
            val = env.lookup(expr.name)
            if isinstance(val, Species):
                return val.display_name
        except KeyError:
            pass
    if isinstance(expr, A.Call) and isinstance(expr.callee, A.Var) and len(expr.args) == 1:
        inner = _label_with_display_names(expr.args[0], env, None)
        if inner is not None:
            return f"{expr.callee.name}({inner})"
    return fallback


def _is_bound(env: Env, name: str) -> bool:
    """True when `name` resolves to a user binding. The global builtin of the
    same name does not count: `sin` stays symbolic in rate expressions and
    `var`/`sd`/... stay observer markers unless the user rebinds them."""
    try:
        val = env.lookup(name)
    except KeyError:
        return False
    return not (isinstance(val, Builtin) and val.name == name)


def _exec_equilibrate(s: A.EquilibrateStmt, env: Env, ctx: EmissionContext):
    if s.sample is not None:
        try:
            target = env.lookup(s.sample)
        except KeyError:
            raise EvalError(f"unknown sample '{s.sample}'", s.span) from None
        target = _need_sample(target, s)
    else:
        target = ctx.current_sample
    duration = _need_number(_eval(s.duration, env, ctx), s.duration)
    temp_k = None
    if s.temperature is not None:
        t = _need_number(_eval(s.temperature, env, ctx), s.temperature)
        temp_k = t if s.temp_unit == "kelvin" else t + 273.15
    cfg = ctx.config
    if cfg.check_only:
        ctx.log_step("equilibrate", [target.id], [target.id],
                     duration=duration, temperature_k=temp_k or target.temperature_k)
        return
    sample_sids = set(target.species_ids())
    try:
        tc = protocol.equilibrate(
            target, ctx.network, duration, temperature_k=temp_k,
            lna=cfg.lna, rtol=cfg.rtol, atol=cfg.atol, n_points=cfg.n_points)
    except protocol.ProtocolError as exc:
        raise EvalError(str(exc), s.span) from exc
    for spec in ctx.reports:
        obs = spec.observer
        if not obs.expr.species_ids() <= sample_sids:
            continue
        if len(tc.times) == 0:
            series = np.zeros(0)
        else:
            try:
                series = observe(tc, obs)
            except ObserverError as exc:
                raise EvalError(str(exc), spec.span) from exc
        label = obs.label
        suffix = 1
        while label in tc.observers:
            suffix += 1
            label = f"{obs.label}#{suffix}"
        tc.observers[label] = series
        tc.observer_order.append(label)
    ctx.trace.timecourses.append(tc)
    ctx.log_step("equilibrate", [target.id], [target.id],
                 duration=duration, temperature_k=target.temperature_k)
    # the implicit vessel lives off-device; only injected droplets park
    if ctx.device is not None and target.id in ctx.device.by_sample:
        ctx.device.park(target.id, target.temperature_k, duration)


def _exec_sample(s: A.SampleStmt, env: Env, ctx: EmissionContext):
    smp = protocol.new_sample(s.name, 1.0, lna=ctx.config.lna)
    body_env = Env(env)
    prev = ctx.current_sample
    ctx.current_sample = smp
    try:
        for b in s.body:
            if isinstance(b, A.VolumeStmt):
                v = _need_number(_eval(b.value, body_env, ctx), b.value)
                if b.unit == "mL":
                    v *= 1000.0
                if v <= 0:
                    raise EvalError(f"sample volume must be > 0, got {v} µL", b.span)
                smp.volume_ul = v
            elif isinstance(b, A.TemperatureStmt):
                t = _need_number(_eval(b.value, body_env, ctx), b.value)
                smp.temperature_k = t if b.unit == "kelvin" else t + 273.15
            else:
                _exec_stmt(b, body_env, ctx)
    finally:
        ctx.current_sample = prev
    env.bind(s.name, smp)
    ctx.trace.samples.append(smp)
    ctx.log_step("new_sample", [], [smp.id], name=s.name,
                 volume_ul=smp.volume_ul, temperature_k=smp.temperature_k)
    if ctx.device is not None:
        try:
            ctx.device.inject(smp)
        except Exception as exc:
            raise EvalError(str(exc), s.span) from exc


def _exec_mix(s: A.MixStmt, env: Env, ctx: EmissionContext):
    sources = [_need_sample(_eval(e, env, ctx), e) for e in s.sources]
    acc = sources[0]
    for nxt in sources[1:]:
        in_ids = [acc.id, nxt.id]
        try:
            out = protocol.mix(acc, nxt, name=s.target)
        except protocol.ProtocolError as exc:
            raise EvalError(str(exc), s.span) from exc
        ctx.log_step("mix", in_ids, [out.id], name=s.target)
        if ctx.device is not None:
            try:
                ctx.device.merge(in_ids[0], in_ids[1], out)
            except Exception as exc:
                raise EvalError(str(exc), s.span) from exc
        acc = out
    env.bind(s.target, acc)
    ctx.trace.samples.append(acc)


def _exec_split(s: A.SplitStmt, env: Env, ctx: EmissionContext):
    src = _need_sample(_eval(s.source, env, ctx), s.source)
    p = 0.5
    if s.proportion is not None:
        p = _need_number(_eval(s.proportion, env, ctx), s.proportion)
    try:
        a, b = protocol.split(src, p, names=s.targets,
                              binomial_split=ctx.config.binomial_split)
    except protocol.ProtocolError as exc:
        raise EvalError(str(exc), s.span) from exc
    env.bind(s.targets[0], a)
    env.bind(s.targets[1], b)
    ctx.trace.samples.append(a)
    ctx.trace.samples.append(b)
    ctx.log_step("split", [src.id], [a.id, b.id], proportion=p)
    if ctx.device is not None:
        try:
            ctx.device.split(src.id, a, b, p)
        except Exception as exc:
            raise EvalError(str(exc), s.span) from exc


# --- expression evaluation -------------------------------------------------

def _eval(e, env: Env, ctx: EmissionContext):
    if isinstance(e, A.NumberLit):
        return e.value
    if isinstance(e, A.BoolLit):
        return e.value
    if isinstance(e, A.StringLit):
        return e.value
    if isinstance(e, A.Var):
        try:
            return env.lookup(e.name)
        except KeyError:
            raise EvalError(f"unbound name '{e.name}'", e.span) from None
    if isinstance(e, A.Unary):
        v = _eval(e.operand, env, ctx)
        if e.op == "-":
            return -_need_number(v, e.operand)
        if e.op == "not":
            if not isinstance(v, bool):
                raise EvalError("'not' needs a boolean", e.operand.span)
            return not v
    if isinstance(e, A.Binary):
        return _eval_binary(e, env, ctx)
    if isinstance(e, A.Call):
        return _eval_call(e, env, ctx)
    raise EvalError(f"cannot evaluate {type(e).__name__}", e.span)


def _eval_binary(e: A.Binary, env: Env, ctx: EmissionContext):
    op = e.op
    if op == "and":
        left = _eval(e.left, env, ctx)
        if not isinstance(left, bool):
            raise EvalError("'and' needs booleans", e.left.span)
        return left and _eval(e.right, env, ctx)
    if op == "or":
        left = _eval(e.left, env, ctx)
        if not isinstance(left, bool):
            raise EvalError("'or' needs booleans", e.left.span)
        return left or _eval(e.right, env, ctx)
    lv = _eval(e.left, env, ctx)
    rv = _eval(e.right, env, ctx)
    if op in ("==", "!="):
        eq = lv == rv
        return eq if op == "==" else not eq
    ln = _need_number(lv, e.left)
    rn = _need_number(rv, e.right)
    if op == "+":
        return ln + rn
    if op == "-":
        return ln - rn
    if op == "*":
        return ln * rn
    if op == "/":
        if rn == 0:
            raise EvalError("division by zero", e.span)
        return ln / rn
    if op == "^":
        return ln ** rn
    if op == "<":
        return ln < rn
    if op == "<=":
        return ln <= rn
    if op == ">":
        return ln > rn
    if op == ">=":
        return ln >= rn
    raise EvalError(f"unknown operator '{op}'", e.span)


def _eval_call(e: A.Call, env: Env, ctx: EmissionContext):
    callee = _eval(e.callee, env, ctx)
    args = [_eval(a, env, ctx) for a in e.args]
    if isinstance(callee, Builtin):
        if callee.arity >= 0 and len(args) != callee.arity:
            raise EvalError(f"{callee.name}() takes {callee.arity} argument(s), "
                            f"got {len(args)}", e.span)
        try:
            return callee.fn(*args)
        except EvalError:
            raise
        except Exception as exc:
            raise EvalError(f"{callee.name}(): {exc}", e.span) from exc
    if isinstance(callee, Dataset):
        if len(args) != 2:
            raise EvalError("dataset lookup takes (label, time)", e.span)
        label, t = args
        if not isinstance(label, str):
            raise EvalError("dataset label must be a string", e.span)
        try:
            return callee.interpolate(label, _need_number(t, e))
        except rate_expr.RateExprError as exc:
            raise EvalError(str(exc), e.span) from exc
    if isinstance(callee, Closure):
        if len(args) != len(callee.params):
            raise EvalError(
                f"function '{callee.name}' takes {len(callee.params)} argument(s), "
                f"got {len(args)}", e.span)
        ctx.depth += 1
        if ctx.depth > ctx.config.recursion_limit:
            ctx.depth -= 1
            raise EvalError(
                f"recursion depth limit exceeded ({ctx.config.recursion_limit})",
                e.span)
        call_env = Env(callee.env)
        for p, v in zip(callee.params, args):
            call_env.bind(p, v)
        try:
            _exec_block(callee.body, call_env, ctx)
            return None
        except _Return as r:
            return r.value
        finally:
            ctx.depth -= 1
    raise EvalError("value is not callable", e.span)


def _need_number(v, node) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        span = getattr(node, "span", None)
        raise EvalError(f"expected a number, got {_type_name(v)}", span)
    return float(v)


def _need_sample(v, node) -> protocol.Sample:
    if not isinstance(v, protocol.Sample):
        span = getattr(node, "span", None)
        raise EvalError(f"expected a sample, got {_type_name(v)}", span)
    return v


def _type_name(v) -> str:
    if isinstance(v, protocol.Sample):
        return "sample"
    if isinstance(v, Species):
        return "species"
    if isinstance(v, (Closure, Builtin)):
        return "function"
    if v is None:
        return "nothing"
    return type(v).__name__


# --- rate-expression compilation ------------------------------------------

_MATH_FNS = {"exp", "log", "sqrt", "sin", "cos", "tan", "abs", "min", "max"}


def compile_rate_expr(e, env: Env, ctx: EmissionContext) -> rate_expr.Node:
    """Lower a surface expression to a compiled rate expression: species-
    valued variables become concentration references, numbers fold to
    constants, `t` and `temp` stay symbolic."""
    if isinstance(e, A.NumberLit):
        return rate_expr.Const(e.value)
    if isinstance(e, A.Var):
        try:
            val = env.lookup(e.name)
        except KeyError:
            if e.name == "t":
                return rate_expr.Time()
            if e.name == "temp":
                return rate_expr.Temp()
            raise EvalError(f"unbound name '{e.name}' in rate expression",
                            e.span) from None
        if isinstance(val, Species):
            return rate_expr.Conc(val.id)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise EvalError(f"'{e.name}' ({_type_name(val)}) cannot appear in a "
                            "rate expression", e.span)
        return rate_expr.Const(float(val))
    if isinstance(e, A.Unary) and e.op == "-":
        return rate_expr.neg(compile_rate_expr(e.operand, env, ctx))
    if isinstance(e, A.Binary) and e.op in "+-*/^":
        left = compile_rate_expr(e.left, env, ctx)
        right = compile_rate_expr(e.right, env, ctx)
        return rate_expr.BinOp(e.op, left, right)
    if isinstance(e, A.Call):
        if isinstance(e.callee, A.Var) and e.callee.name in _MATH_FNS \
                and not _is_bound(env, e.callee.name):
            args = tuple(compile_rate_expr(a, env, ctx) for a in e.args)
            return rate_expr.Call(e.callee.name, args)
        callee = _eval(e.callee, env, ctx)
        if isinstance(callee, Dataset):
            if len(e.args) != 2 or not isinstance(e.args[0], A.StringLit):
                raise EvalError('dataset lookup needs ("label", time-expression)',
                                e.span)
            at = compile_rate_expr(e.args[1], env, ctx)
            return rate_expr.DatasetLookup(callee, e.args[0].value, at)
        raise EvalError("only math functions and dataset lookups may be called "
                        "in rate expressions", e.span)
    raise EvalError(f"{type(e).__name__} not allowed in a rate expression",
                    getattr(e, "span", None))


# --- builtins --------------------------------------------------------------

def _install_builtins(env: Env, ctx: EmissionContext):
    import math

    for name in ("exp", "log", "sqrt", "sin", "cos", "tan"):
        env.bind(name, Builtin(name, getattr(math, name), 1))
    env.bind("abs", Builtin("abs", abs, 1))
    env.bind("floor", Builtin("floor", lambda x: float(math.floor(x)), 1))
    env.bind("ceil", Builtin("ceil", lambda x: float(math.ceil(x)), 1))
    env.bind("min", Builtin("min", min, 2))
    env.bind("max", Builtin("max", max, 2))

    def _capture(i):
        if isinstance(i, bool) or not isinstance(i, (int, float)) or i != int(i):
            raise EvalError("capture() takes an integer run index")
        return capture_timecourse(ctx.trace, int(i))

    env.bind("capture", Builtin("capture", _capture, 1))
