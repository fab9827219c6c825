"""Scenario files and result artifacts.

Scenario files are JSON with every monetary/physical quantity carried as a
string so nothing is ever squeezed through binary floating point. Writers are
atomic (write to a sibling temp file, then rename) and fully deterministic:
fixed key order, fixed decimal formatting, no timestamps, so re-running a
command byte-reproduces its outputs.
"""

from __future__ import annotations

import json
import os
import tempfile
from decimal import Decimal
from pathlib import Path

from .errors import ValidationError
from .model import (
    RouteSpec,
    Scenario,
    SensitivityModifiers,
    to_decimal,
)

FORMAT_NAME = "ecolever-scenario"
FORMAT_VERSION = 1

_ROUTE_FIELDS = ("route_id", "product_id", "technology_id", "unit_cost",
                 "unit_emissions", "unit_circularity", "recovered_outputs",
                 "subsidizable", "tags", "stages")
_MODIFIER_FIELDS = ("glass_wash_distance", "glass_loss_fraction",
                    "distance_cost_coeff", "distance_emission_coeff",
                    "loss_cost_coeff", "loss_emission_coeff",
                    "affected_route_ids")
_TOP_FIELDS = ("format", "version", "demand", "routes", "modifiers",
               "technology_fixed_costs", "capacity_limits")


def bundled_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "coffee_case.scenario"


def _decimal_out(value: Decimal) -> str:
    return str(value)


def scenario_to_dict(scenario: Scenario) -> dict:
    routes = []
    for r in scenario.routes:
        routes.append({
            "route_id": r.route_id,
            "product_id": r.product_id,
            "technology_id": r.technology_id,
            "unit_cost": _decimal_out(r.unit_cost),
            "unit_emissions": _decimal_out(r.unit_emissions),
            "unit_circularity": _decimal_out(r.unit_circularity),
            "recovered_outputs": list(r.recovered_outputs),
            "subsidizable": r.subsidizable,
            "tags": list(r.tags),
            "stages": list(r.stages),
        })
    m = scenario.modifiers
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "demand": scenario.demand,
        "routes": routes,
        "modifiers": {
            "glass_wash_distance": _decimal_out(m.glass_wash_distance),
            "glass_loss_fraction": _decimal_out(m.glass_loss_fraction),
            "distance_cost_coeff": _decimal_out(m.distance_cost_coeff),
            "distance_emission_coeff": _decimal_out(m.distance_emission_coeff),
            "loss_cost_coeff": _decimal_out(m.loss_cost_coeff),
            "loss_emission_coeff": _decimal_out(m.loss_emission_coeff),
            "affected_route_ids": list(m.affected_route_ids),
        },
        "technology_fixed_costs": {t: _decimal_out(c) for t, c
                                   in sorted(scenario.technology_fixed_costs.items())},
        "capacity_limits": {r: c for r, c in sorted(scenario.capacity_limits.items())},
    }


def scenario_from_dict(data: dict) -> Scenario:
    v = []
    if not isinstance(data, dict):
        raise ValidationError(["scenario file must hold a JSON object"])
    if data.get("format") != FORMAT_NAME:
        v.append(f'"format" must be "{FORMAT_NAME}"')
    if data.get("version") != FORMAT_VERSION:
        v.append(f'"version" must be {FORMAT_VERSION}')
    for key in data:
        if key not in _TOP_FIELDS:
            v.append(f"unknown top-level key {key!r}")
    for key in ("demand", "routes"):
        if key not in data:
            v.append(f"missing required key {key!r}")
    if v:
        raise ValidationError(v)

    routes = []
    for i, raw in enumerate(data["routes"]):
        if not isinstance(raw, dict):
            v.append(f"routes[{i}] must be an object")
            continue
        for key in raw:
            if key not in _ROUTE_FIELDS:
                v.append(f"routes[{i}]: unknown key {key!r}")
        missing = [k for k in ("route_id", "product_id", "technology_id", "unit_cost",
                               "unit_emissions", "unit_circularity") if k not in raw]
        if missing:
            v.append(f"routes[{i}]: missing {', '.join(missing)}")
            continue
        try:
            routes.append(RouteSpec(
                route_id=raw["route_id"],
                product_id=raw["product_id"],
                technology_id=raw["technology_id"],
                unit_cost=to_decimal(raw["unit_cost"], f"routes[{i}].unit_cost"),
                unit_emissions=to_decimal(raw["unit_emissions"], f"routes[{i}].unit_emissions"),
                unit_circularity=to_decimal(raw["unit_circularity"], f"routes[{i}].unit_circularity"),
                recovered_outputs=tuple(raw.get("recovered_outputs", ())),
                subsidizable=bool(raw.get("subsidizable", True)),
                tags=tuple(raw.get("tags", ())),
                stages=tuple(raw.get("stages", ())),
            ))
        except ValidationError as exc:
            v.extend(exc.violations)
    mods_raw = data.get("modifiers", {})
    modifiers = SensitivityModifiers()
    if mods_raw:
        for key in mods_raw:
            if key not in _MODIFIER_FIELDS:
                v.append(f"modifiers: unknown key {key!r}")
        try:
            modifiers = SensitivityModifiers(
                glass_wash_distance=to_decimal(mods_raw.get("glass_wash_distance", 0), "glass_wash_distance"),
                glass_loss_fraction=to_decimal(mods_raw.get("glass_loss_fraction", 0), "glass_loss_fraction"),
                distance_cost_coeff=to_decimal(mods_raw.get("distance_cost_coeff", 0), "distance_cost_coeff"),
                distance_emission_coeff=to_decimal(mods_raw.get("distance_emission_coeff", 0), "distance_emission_coeff"),
                loss_cost_coeff=to_decimal(mods_raw.get("loss_cost_coeff", 0), "loss_cost_coeff"),
                loss_emission_coeff=to_decimal(mods_raw.get("loss_emission_coeff", 0), "loss_emission_coeff"),
                affected_route_ids=tuple(mods_raw.get("affected_route_ids", ())),
            )
        except ValidationError as exc:
            v.extend(exc.violations)
    if v:
        raise ValidationError(v)
    return Scenario(
        demand=data["demand"],
        routes=tuple(routes),
        modifiers=modifiers,
        technology_fixed_costs={t: to_decimal(c, f"technology_fixed_costs[{t}]")
                                for t, c in data.get("technology_fixed_costs", {}).items()},
        capacity_limits=dict(data.get("capacity_limits", {})),
    )


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over the
    target, so readers never observe a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_scenario(scenario: Scenario, path) -> None:
    text = json.dumps(scenario_to_dict(scenario), indent=2) + "\n"
    atomic_write_text(path, text)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError([f"cannot read scenario file {path}: {exc.strerror or exc}"])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            [f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"])
    return scenario_from_dict(data)


def load_bundled_scenario() -> Scenario:
    return load_scenario(bundled_scenario_path())


def format_decimal(value, places: int = 6) -> str:
    """Fixed-point rendering with exactly `places` fractional digits.

    Quantizes half-even and normalizes negative zero, so equal quantities
    always produce identical bytes.
    """
    q = Decimal(1).scaleb(-places)
    out = to_decimal(value, "value").quantize(q)
    if out == 0:
        out = out.copy_abs()
    return f"{out:f}"


def write_sweep_csv(records, path, route_ids=None) -> None:
    """One row per budget: policy, funds flows, objective, and allocation."""
    if route_ids is None:
        seen = set()
        for rec in records:
            seen.update(rec.units)
        route_ids = sorted(seen)
    header = (["budget", "tax_rate", "tax_income", "subsidy_outlay", "upper_value"]
              + [f"units_{rid}" for rid in route_ids] + ["industry_cost"])
    lines = [",".join(header)]
    for rec in records:
        row = [format_decimal(rec.budget),
               format_decimal(rec.tax_rate),
               format_decimal(rec.tax_income),
               format_decimal(rec.subsidy_outlay),
               format_decimal(rec.upper_value)]
        row += [str(rec.units.get(rid, 0)) for rid in route_ids]
        row.append(format_decimal(rec.industry_cost))
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_sensitivity_csv(sweeps, path) -> None:
    """Flat table across parameter settings and budgets, with the route that
    carries the allocation at each point."""
    header = ["parameter", "value", "budget", "tax_rate", "tax_income",
              "subsidy_outlay", "upper_value", "industry_cost", "dominant_route"]
    lines = [",".join(header)]
    for sweep in sweeps:
        for rec, dom in zip(sweep.records, sweep.dominant_routes):
            lines.append(",".join([
                sweep.parameter,
                format_decimal(sweep.value),
                format_decimal(rec.budget),
                format_decimal(rec.tax_rate),
                format_decimal(rec.tax_income),
                format_decimal(rec.subsidy_outlay),
                format_decimal(rec.upper_value),
                format_decimal(rec.industry_cost),
                dom if dom is not None else "",
            ]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def outcome_to_dict(outcome) -> dict:
    r = outcome.response
    return {
        "objective": str(getattr(outcome.objective, "value", outcome.objective)),
        "mode": outcome.mode,
        "budget": _decimal_out(outcome.budget),
        "feasible": outcome.feasible,
        "policy": {
            "tax_rate": _decimal_out(outcome.policy.tax_rate),
            "subsidy_rates": {rid: _decimal_out(s) for rid, s
                              in sorted(outcome.policy.subsidy_rates.items())},
        },
        "upper_value": _decimal_out(outcome.upper_value),
        "response": {
            "allocation": {rid: n for rid, n in sorted(r.allocation.units.items())},
            "industry_cost": _decimal_out(r.industry_cost),
            "total_emissions": _decimal_out(r.total_emissions),
            "circularity_index": _decimal_out(r.circularity_index),
            "subsidy_outlay": _decimal_out(r.subsidy_outlay),
            "tax_payment": _decimal_out(r.tax_payment),
        },
        "evaluations": outcome.evaluations,
        "trace": [[i, _decimal_out(val)] for i, val in outcome.trace],
    }


def write_outcome_json(outcome, path) -> None:
    atomic_write_text(path, json.dumps(outcome_to_dict(outcome), indent=2) + "\n")


def write_svg_line_chart(path, series, title="", x_label="", y_label="",
                         width=720, height=440) -> None:
    """Minimal multi-series line chart, no dependencies.

    series: list of (name, points) with points as (x, y) pairs in data space.
    Geometry is computed in floats; this is presentation only.
    """
    pad = 56
    pts_all = [(float(x), float(y)) for _, pts in series for x, y in pts]
    if not pts_all:
        xs = ys = [0.0, 1.0]
    else:
        xs = [p[0] for p in pts_all]
        ys = [p[1] for p in pts_all]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    colors = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b", "#34495e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        f'stroke="#444" stroke-width="1"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="#444" stroke-width="1"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{y_label}</text>',
    ]
    for k in range(5):
        xv = x_lo + (x_hi - x_lo) * k / 4
        yv = y_lo + (y_hi - y_lo) * k / 4
        parts.append(f'<text x="{sx(xv):.1f}" y="{height - pad + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{xv:.4g}</text>')
        parts.append(f'<text x="{pad - 6}" y="{sy(yv) + 3:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{yv:.4g}</text>')
    for idx, (name, pts) in enumerate(series):
        color = colors[idx % len(colors)]
        coords = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * idx}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    atomic_write_text(path, "\n".join(parts) + "\n")
