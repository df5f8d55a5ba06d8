#!/usr/bin/env python3
"""Generate the bundled component catalog (crates/skyforge/data/catalog.jsonl).

The records are synthetic but physically plausible: attribute ranges and
correlations follow typical hobby-grade multirotor parts. Output is
deterministic for a given --seed.

    python3 scripts/gen_catalog.py [--seed 7] [--out crates/skyforge/data/catalog.jsonl]
"""

import argparse
import json
import math
import random
from pathlib import Path

N_MOTORS = 220
N_PROPS = 180
N_ESCS = 80
N_BATTERIES = 163  # 643 records in total

# Parts that must exist under these exact ids.
FIXED = [
    {"id": "t_motor_MN2212KV780", "kind": "Motor",
     "attributes": {"kv_rpm_per_volt": 780.0, "max_current_A": 18.0, "resistance_ohm": 0.133, "mass_g": 55.0}},
    {"id": "apc_propellers_12x5", "kind": "Propeller",
     "attributes": {"diameter_in": 12.0, "pitch_in": 5.0, "thrust_coeff_Ct": 0.112, "power_coeff_Cp": 0.045, "mass_g": 19.0}},
    {"id": "t_motor_T_80A", "kind": "ESC",
     "attributes": {"max_current_A": 80.0, "mass_g": 64.0}},
    {"id": "TurnigyGraphene1400mAh3S75C", "kind": "Battery",
     "attributes": {"capacity_mAh": 1400.0, "voltage_V": 11.1, "max_discharge_C": 75.0, "mass_g": 132.0}},
]

MOTOR_BRANDS = ["t_motor_MN", "t_motor_MT", "t_motor_U", "kde_", "scorpion_SII_", "emax_MT", "sunnysky_X", "cobra_CM_"]
BATTERY_BRANDS = ["TurnigyGraphene", "TurnigyNanoTech", "Tattu", "GensAce", "ZippyCompact", "MaxAmps"]
ESC_BRANDS = ["t_motor_T_", "t_motor_AIR_", "hobbywing_XRotor_", "castle_Talon_", "kde_UAS_"]


def r3(x):
    return float(f"{x:.4g}")


def motor(rng):
    # Stator size drives mass and current; Kv falls with size.
    stator = rng.uniform(14, 60)  # mm diameter-ish
    height = rng.choice([6, 8, 10, 12, 13, 15, 18])
    mass = 0.018 * stator ** 1.8 * (height / 10) * rng.uniform(0.85, 1.15)
    kv = math.exp(rng.uniform(math.log(120), math.log(2600))) * (28 / stator) ** 0.5
    kv = min(max(kv, 80.0), 3200.0)
    max_a = 0.28 * mass ** 0.9 * rng.uniform(0.8, 1.25)
    resistance = 6.0 / max(kv, 1) ** 0.9 * rng.uniform(0.7, 1.3)
    name = f"{rng.choice(MOTOR_BRANDS)}{int(stator)}{height:02d}KV{int(round(kv, -1))}"
    return name, {"kv_rpm_per_volt": r3(kv), "max_current_A": r3(max_a), "resistance_ohm": r3(resistance), "mass_g": r3(mass)}


def prop(rng):
    d = rng.choice([4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 12, 13, 14, 15, 17, 20])
    pitch = max(2.0, round(d * rng.uniform(0.3, 0.7) * 2) / 2)
    ratio = pitch / d
    ct = 0.07 + 0.10 * ratio * rng.uniform(0.85, 1.15)
    cp = 0.015 + 0.07 * ratio ** 1.5 * rng.uniform(0.85, 1.15)
    mass = 0.11 * d ** 2.0 * rng.uniform(0.7, 1.4)
    brand = rng.choice(["apc_propellers_", "tmotor_carbon_", "gemfan_", "xoar_"])
    name = f"{brand}{d}x{pitch:g}".replace(".", "p")
    return name, {"diameter_in": float(d), "pitch_in": float(pitch), "thrust_coeff_Ct": r3(ct), "power_coeff_Cp": r3(cp), "mass_g": r3(mass)}


def esc(rng):
    amps = rng.choice([6, 10, 12, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70, 80, 100, 120])
    mass = (3 + 0.6 * amps) * rng.uniform(0.8, 1.2)
    return f"{rng.choice(ESC_BRANDS)}{amps}A", {"max_current_A": float(amps), "mass_g": r3(mass)}


def battery(rng):
    cells = rng.choice([1, 2, 3, 3, 4, 4, 6, 6, 8, 12])
    capacity = rng.choice([300, 450, 650, 850, 1000, 1300, 1400, 1500, 1800, 2200, 2650, 3000, 3300,
                           4000, 4500, 5000, 5200, 6000, 8000, 10000, 12000, 16000])
    c_rate = rng.choice([15, 20, 25, 30, 35, 40, 45, 50, 60, 65, 75, 100])
    volts = 3.7 * cells
    wh = capacity / 1000 * volts
    mass = wh / 0.150 * rng.uniform(0.9, 1.15) + 2 * cells
    name = f"{rng.choice(BATTERY_BRANDS)}{capacity}mAh{cells}S{c_rate}C"
    return name, {"capacity_mAh": float(capacity), "voltage_V": r3(volts), "max_discharge_C": float(c_rate), "mass_g": r3(mass)}


def build(seed):
    rng = random.Random(seed)
    records = {r["id"]: r for r in FIXED}
    for kind, maker, count in [("Motor", motor, N_MOTORS), ("Propeller", prop, N_PROPS),
                               ("ESC", esc, N_ESCS), ("Battery", battery, N_BATTERIES)]:
        have = sum(1 for r in records.values() if r["kind"] == kind)
        while have < count:
            name, attrs = maker(rng)
            if name in records:
                # same nominal part from another batch: disambiguate
                name = f"{name}_v{rng.randrange(2, 99)}"
                if name in records:
                    continue
            records[name] = {"id": name, "kind": kind, "attributes": dict(sorted(attrs.items()))}
            have += 1
    return sorted(records.values(), key=lambda r: r["id"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "crates/skyforge/data/catalog.jsonl")
    args = ap.parse_args()
    records = build(args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w") as f:
        for r in records:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    print(f"wrote {len(records)} records to {args.out}")


if __name__ == "__main__":
    main()
