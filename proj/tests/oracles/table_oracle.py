#!/usr/bin/env python3
"""Independent recomputation of the published benchmark tables.

Mirrors the spreadsheet formulas cell by cell, including the chained
rounding of intermediate cells, and writes the resolved inputs plus the
expected display values to tables_expected.json. The C++ tests only read
the output; nothing here imports or calls the C++ implementation.

Usage: table_oracle.py tables_raw.json tables_expected.json
"""
import ast
import json
import operator
import sys
from decimal import ROUND_HALF_UP, Decimal


def rnd(x, digits):
    """Round half away from zero, as the table tooling does."""
    if digits is None:
        return x
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul}


def cost(expr):
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(expr)
    return float(ev(ast.parse(expr.replace(" ", ""), mode="eval")))


def power_table(spec, yield_digits, yield_scale):
    years, price, installed = spec["years"], spec["price_eur_per_kwh"], spec["installed_gpus"]
    out = []
    for r in spec["rows"]:
        if "meter_kwh_300s" in r:
            # meter reading over 300 s -> W, then remove the idle cards
            watts = r["meter_kwh_300s"] * 1000 * 12 - (installed - r["active"]) * r["idle_w"]
            reading = {"kind": "meter_kwh_per_300s", "value": r["meter_kwh_300s"]}
        else:
            # same idle-card correction on a direct wattage reading
            watts = r["direct_w"] - (installed - r["active"]) * r["idle_w"]
            reading = {"kind": "direct_watts", "value": r["direct_w"]}
        reading.update({"gpus_installed": installed, "gpus_active": r["active"], "idle_gpu_power_w": r["idle_w"]})
        row = {"label": r["label"], "reading": reading, "node_cost": cost(r["node_cost"]),
               "performance": r["P"], "power_w": rnd(watts, 2)}
        energy = rnd(years * row["power_w"] * 365 * 24 * price / 1000, 0)
        row["energy_cost"] = energy
        if r["P"] is not None:
            production = rnd(r["P"] * 0.365 * years, 2)
            total = energy + row["node_cost"]
            row["production_us"] = production
            row["trajectory_cost"] = rnd(total / production, 0)
            row["yield"] = rnd(yield_scale * production / (total / 1000), yield_digits)
        out.append(row)
    return {"years": years, "price_eur_per_kwh": price, "rows": out}


def price_table(spec):
    out = []
    for label, p, expr in spec["rows"]:
        shown = rnd(p, spec["p_digits"])
        c = cost(expr)
        out.append({"label": label, "performance": p, "cost": c,
                    "perf_per_price": rnd(shown / (c / spec["normalizer"]), spec["ratio_digits"])})
    return {"normalizer": spec["normalizer"], "rows": out}


def scaling_table(spec):
    out = []
    for s in spec["series"]:
        p1 = rnd(s["points"][0][1], s["points"][0][2])
        pts = []
        for m, p, d in s["points"]:
            shown = rnd(p, d)
            pts.append({"nodes": m, "performance": p, "efficiency": rnd(shown / (m * p1), spec["e_digits"])})
        out.append({"label": s["label"], "points": pts})
    return {"series": out}


def multi_table(spec):
    out = []
    base = rnd(spec["rows"][0][1], spec["rows"][0][2])
    for m, p1, d1, p4, d4 in spec["rows"]:
        s1, s4 = rnd(p1, d1), rnd(p4, d4)
        out.append({"nodes_per_replica": m, "single": p1, "multi": p4,
                    "e_single": rnd(s1 / (m * base), spec["e_digits"]),
                    "e_multi": rnd(s4 / (m * base), spec["e_digits"]),
                    "gain_pct": rnd(100 * (s4 / s1 - 1), 1)})
    return {"rows": out}


def compiler_table(spec):
    out = []
    for b in spec["blocks"]:
        base_mem, base_rib = rnd(b["rows"][0][1], 1), rnd(b["rows"][0][2], 2)
        rows = []
        for name, mem, rib in b["rows"]:
            d, f = rnd(mem, 1) / base_mem, rnd(rib, 2) / base_rib
            rows.append({"compiler": name, "mem": mem, "rib": rib,
                         "avg_speedup_pct": rnd(100 * ((d + f) / 2 - 1), 1)})
        out.append({"label": b["label"], "rows": rows})
    return {"blocks": out}


def balance_table(spec):
    out = []
    for gpus, p, w, rc, ratio in spec["rows"]:
        out.append({"gpus": gpus, "performance": p, "power_w": w, "cutoff_nm": rc, "pp_cost_ratio": ratio,
                    "w_per_ns_day": rnd(w / rnd(p, 2), 0)})
    return {"rows": out}


def main(src, dst):
    with open(src) as f:
        raw = json.load(f)
    doc = {
        "rib_power": power_table(raw["rib_power"], 0, 1000),
        "mem_power": power_table(raw["mem_power"], 3, 1),
        "mem_price": price_table(raw["mem_price"]),
        "rib_price": price_table(raw["rib_price"]),
        "mem_scaling": scaling_table(raw["mem_scaling"]),
        "rib_scaling": scaling_table(raw["rib_scaling"]),
        "rib_multi": multi_table(raw["rib_multi"]),
        "compilers": compiler_table(raw["compilers"]),
        "gpu_balance": balance_table(raw["gpu_balance"]),
    }
    with open(dst, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
