"""Machine-readable output: unit-tagged quantities, fixed float formatting."""
from __future__ import annotations

import csv
import io
import math
import warnings

import numpy as np

from .beam import beam_mode
from .coupling import (
    build_effective_model,
    g_overlap_integral,
    laser_cooling_rate,
    motional_decoherence,
    neglect_checks,
    trap_frequency,
)
from .params import DeviceParams, IonParams, to_hz, validate

__all__ = ["SCHEMA", "quantity", "dumps", "flatten", "to_csv", "rows_to_csv", "device_report"]

SCHEMA = "nanotrap/1"


def quantity(value, unit: str) -> dict:
    return {"value": value, "unit": unit}


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""
    out = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.append(f"{pad}{_str(str(k))}: ")
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "}")
        elif isinstance(o, (list, tuple)):
            if not o:
                out.append("[]")
                return
            if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in o):
                out.append("[" + ", ".join(_scalar(v) for v in o) + "]")
                return
            out.append("[\n")
            for i, v in enumerate(o):
                out.append(pad)
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "]")
        else:
            out.append(_scalar(o))

    emit(obj, 0)
    return "".join(out) + "\n"


def _str(s):
    import json

    return json.dumps(s, ensure_ascii=False)


def _scalar(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt(float(v))
    if isinstance(v, str):
        return _str(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def flatten(obj, prefix="") -> list[tuple[str, object, str]]:
    """(key, value, unit) rows for every unit-tagged quantity in ``obj``."""
    rows = []
    if isinstance(obj, dict):
        if set(obj) == {"value", "unit"}:
            return [(prefix, obj["value"], obj["unit"])]
        for k, v in obj.items():
            rows += flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows += flatten(v, f"{prefix}[{i}]")
    elif isinstance(obj, str):
        rows.append((prefix, obj, ""))
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return _fmt(float(v))
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def to_csv(obj) -> str:
    return rows_to_csv(["key", "value", "unit"], flatten(obj))


def device_report(params: DeviceParams, ion: IonParams) -> dict:
    """Everything derivable from the device and ion parameters."""
    rep = validate(params, ion)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        eff = build_effective_model(params, ion)
        w_nu = trap_frequency(params, ion)
        laser_cooling_rate(params, ion, w_nu)
        deco = motional_decoherence(params, ion, w_nu)
        neglect = neglect_checks(params, ion)
        g1 = g_overlap_integral(params, ion, beam_mode(params, 1))
    messages = [str(w) for w in rep.warnings] + sorted({str(w.message) for w in rec})
    if deco.near_resonant:
        messages.append(deco.message)
    if neglect.flagged:
        messages.append(f"kappa ratio {neglect.kappa_ratio:.3g} is not small")
    if eff.gamma_m > 0.1 * eff.gamma_a:
        messages.append(
            f"linear voltage noise gamma_m = {eff.gamma_m:.3g} rad/s competes with laser cooling "
            f"(gamma_a = {eff.gamma_a:.3g} rad/s); correlated electrodes remove it"
        )

    modes = []
    for n in range(1, params.n_modes + 1):
        m = beam_mode(params, n)
        modes.append(
            {
                "index": quantity(n, "1"),
                "omega": quantity(m.omega, "rad/s"),
                "frequency": quantity(to_hz(m.omega), "Hz"),
                "root": quantity(m.root, "1"),
                "center_value": quantity(m.center_value, "1"),
                "parity": m.parity,
            }
        )
    rad = "rad/s"
    return {
        "schema": SCHEMA,
        "modes": modes,
        "omega_nu": quantity(eff.omega_nu, rad),
        "f_nu": quantity(to_hz(eff.omega_nu), "Hz"),
        "omega_b": quantity(eff.omega_b, rad),
        "f_b": quantity(to_hz(eff.omega_b), "Hz"),
        "lambda": quantity(eff.lambda_rate, rad),
        "lambda_up": quantity(eff.lambda_up, rad),
        "eta": quantity(eff.eta, "1"),
        "gamma_a": quantity(eff.gamma_a, rad),
        "gamma_1": quantity(eff.gamma_1, rad),
        "gamma_m": quantity(eff.gamma_m, rad),
        "Gamma_m": quantity(deco.Gamma_m, rad),
        "tau_res_inv": quantity(deco.tau_res_inv, rad),
        "Gamma_nu": quantity(eff.Gamma_nu, rad),
        "n_B": quantity(eff.n_B, "1"),
        "M_p": quantity(eff.M_p, "kg"),
        "mass_ratio": quantity(ion.mass / eff.M_p, "1"),
        "u1_center": quantity(eff.u1_center, "1"),
        "V_eff": quantity(eff.V_eff, "V"),
        "V_image": quantity(eff.V_image, "V"),
        "dx0": quantity(eff.dx0, "m"),
        "g_11": quantity(g1.total, "N/m"),
        "neglect": {
            "kappa_bound": quantity(neglect.kappa_bound, "N/m"),
            "spring_scale": quantity(neglect.spring_scale, "N/m"),
            "kappa_ratio": quantity(neglect.kappa_ratio, "1"),
            "Q_c": quantity(neglect.Q_c_electrons, "e"),
        },
        "warnings": messages,
    }
