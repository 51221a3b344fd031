#!/usr/bin/env python3
"""Writes the bundled desk-scale instance.

Device, tariff, pipe and building parameters follow the reference tables.
Hourly load, weather and renewable sample series are synthetic shapes;
system.json is flagged "synthetic": true.
"""
import csv
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
T = 24


def tariff():
    buy = []
    for h in range(1, T + 1):
        if h <= 7:
            buy.append(0.44)
        elif 10 <= h <= 13 or 19 <= h <= 22:
            buy.append(1.0)
        else:
            buy.append(0.7)
    return {
        "p_buy": buy,
        "p_sell": [0.4] * T,
        "gamma_min": 0.3,
        "gamma_max": 0.66,
        "mu_av": 0.65,
        "gamma_av": 0.5,
    }


def t_out():
    return [round(-2.5 - 3.5 * math.cos(2 * math.pi * (h - 14) / T), 4) for h in range(1, T + 1)]


def t_in():
    return [20.0 if 8 <= h <= 19 else 18.0 for h in range(1, T + 1)]


# Relative electric demand: low overnight, a late-morning and an evening peak.
LOAD_SHAPE = [0.45, 0.42, 0.40, 0.40, 0.42, 0.48, 0.60, 0.75, 0.88, 0.97, 1.00, 0.98,
              0.95, 0.85, 0.80, 0.82, 0.86, 0.92, 0.98, 1.00, 0.96, 0.80, 0.62, 0.50]


def building(name, cies, pipe, F, V, omega, theta, peak, tilt):
    p0 = [round(peak * (s + tilt * math.sin(2 * math.pi * h / T)), 3) for h, s in enumerate(LOAD_SHAPE)]
    return {
        "name": name,
        "cies": cies,
        "pipe": pipe,
        "flex_share": 0.1,
        "params": {
            "K": 0.5, "F": F, "V": V, "c_air": 1.007, "rho_air": 1.2,
            "M": 80.0, "I_cl": 0.161, "T_s": 33.5,
            "omega": omega, "vartheta": 0.002, "theta": theta,
        },
        "p0": p0,
        "t_in": t_in(),
    }


def system():
    ees = lambda c_min, c_max: {
        "c_min": c_min, "c_max": c_max, "c_init": c_min, "p_ch_max": 200.0, "p_dc_max": 200.0,
        "eta_ch": 0.9, "eta_dc": 0.9, "k_loss": 0.001,
    }
    hst = {"c_min": 0.0, "c_max": 400.0, "c_init": 100.0, "p_ch_max": 100.0, "p_dc_max": 100.0,
           "eta_ch": 0.9, "eta_dc": 0.9, "k_loss": 0.01}
    grid = {"p_min": -1000.0, "p_max": 1000.0}
    pipe = lambda name, km, d, m: {"name": name, "length_m": km * 1000.0, "diameter_m": d, "flow_kg_s": m,
                                   "lambda": 0.2, "c_pipe": 4.2e-3, "rho_w": 1000.0}
    return {
        "name": "desk-scale two-community instance",
        "synthetic": True,
        "dt_hours": 1.0,
        "supply_temperature": 80.0,
        "storage_end_rule": "cyclic",
        "t_out": t_out(),
        "tariff": tariff(),
        "costs": {
            "mt": {"a": 1.0, "b": 0.6, "c_start": 1.3},
            "chp": {"a": 2.415e-4, "b": 0.31, "c": 185.5, "d": 2.1e-4, "e": 0.0294, "f": 2.17e-7},
            "om": {"wt": 0.01, "pv": 0.013, "chp": 0.012, "mt": 0.012, "eb": 0.012, "ees": 0.0, "hst": 0.0},
        },
        "tie_line": {"p_min": -400.0, "p_max": 400.0, "h_min": -400.0, "h_max": 400.0},
        "pipes": [pipe("H-4", 1.0, 0.6, 200.0), pipe("H-5", 1.5, 0.7, 250.0), pipe("H-6", 1.8, 0.7, 250.0)],
        "cies": [
            {
                "name": "CIES1", "wt_capacity": 600.0, "pv_capacity": 0.0,
                "chp": {"c_v": 0.75, "p_min": 0.0, "p_max": 1200.0, "h_max": 1200.0,
                        "ramp_down": -250.0, "ramp_up": 250.0},
                "eb": {"eta": 0.95, "p_max": 600.0},
                "ees": ees(100.0, 800.0), "hst": hst, "grid": grid,
            },
            {
                "name": "CIES2", "wt_capacity": 0.0, "pv_capacity": 400.0,
                "mt": {"p_min": 50.0, "p_max": 500.0, "ramp_down": -200.0, "ramp_up": 200.0,
                       "initially_on": False},
                "eb": {"eta": 0.95, "p_max": 600.0},
                "ees": ees(80.0, 700.0), "hst": hst, "grid": grid,
            },
        ],
        "buildings": [
            building("User1", "CIES2", "H-4", 4.5e4, 4.5e5, 0.003, 0.008, 650.0, 0.02),
            building("User2", "CIES1", "H-5", 5.0e4, 5.0e5, 0.002, 0.007, 700.0, -0.02),
            building("User3", "CIES1", "H-6", 6.2e4, 3.72e5, 0.004, 0.008, 800.0, 0.0),
        ],
    }


def bump(h, centre, width):
    return math.exp(-0.5 * ((h - centre) / width) ** 2)


WT_TEMPLATES = [
    [0.75 - 0.25 * bump(h, 14, 4) for h in range(T)],         # windy night, calmer afternoon
    [0.30 + 0.10 * math.sin(2 * math.pi * h / T) for h in range(T)],  # light steady wind
    [0.15 + 0.70 * bump(h, 16, 3.5) for h in range(T)],       # afternoon front
    [0.85 - 0.030 * h for h in range(T)],                     # dying storm
]
WT_COUNTS = [152, 95, 62, 91]

PV_TEMPLATES = [
    [0.90 * bump(h, 12, 2.6) for h in range(T)],   # clear
    [0.45 * bump(h, 12, 2.4) for h in range(T)],   # overcast
    [0.70 * bump(h, 11, 2.0) for h in range(T)],   # clouds after noon
]
PV_COUNTS = [140, 108, 152]


def samples(templates, counts, rng, daylight_only):
    rows = []
    for tpl, n in zip(templates, counts):
        for _ in range(n):
            row = []
            for h, v in enumerate(tpl):
                if daylight_only and v < 1e-3:
                    row.append(0.0)
                    continue
                row.append(round(min(1.0, max(0.0, v + rng.gauss(0.0, 0.03))), 5))
            rows.append(row)
    rng.shuffle(rows)
    return rows


def write_samples(path, source, rows):
    with open(path, "w", newline="") as f:
        f.write(f"# source: {source}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"h{h}" for h in range(1, T + 1)])
        w.writerows(rows)


def main():
    rng = random.Random(20240611)
    (HERE / "system.json").write_text(json.dumps(system(), indent=2) + "\n")
    write_samples(HERE / "wt_samples.csv", "WT", samples(WT_TEMPLATES, WT_COUNTS, rng, False))
    write_samples(HERE / "pv_samples.csv", "PV", samples(PV_TEMPLATES, PV_COUNTS, rng, True))


if __name__ == "__main__":
    main()
