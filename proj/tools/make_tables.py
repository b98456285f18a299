#!/usr/bin/env python3
"""Regenerate the shipped attenuation tables and reference spectra.

Requires xraylib (NIST compound database) and spekpy. The generated CSV
files are checked in under data/; this script only needs to run when the
energy grid or the material list changes.
"""
import argparse
import pathlib

import numpy as np
import spekpy
import xraylib

MATERIALS = {
    "bone": "Bone, Cortical (ICRP)",
    "soft": "Tissue, Soft (ICRP)",
    "adipose": "Adipose Tissue (ICRP)",
    "water": "Water, Liquid",
    "csi": "Cesium Iodide",
}
ENERGIES = np.arange(1, 151)


def write_material(out, mat_id, values):
    with open(out / f"{mat_id}.csv", "w") as f:
        f.write("energy_keV,mu_over_rho_cm2_g\n")
        for e, v in zip(ENERGIES, values):
            f.write(f"{e},{v:.6e}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default=pathlib.Path(__file__).parent.parent / "data")
    args = ap.parse_args()
    out = pathlib.Path(args.data) / "attenuation"
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for mat_id, key in MATERIALS.items():
        write_material(out, mat_id, [xraylib.CS_Total_CP(key, float(e)) for e in ENERGIES])
        rows.append((mat_id, xraylib.GetCompoundDataNISTByName(key)["density"], key))
    write_material(out, "aluminum", [xraylib.CS_Total(13, float(e)) for e in ENERGIES])
    rows.append(("aluminum", xraylib.ElementDensity(13), "Aluminum"))

    with open(out / "manifest.csv", "w") as f:
        f.write("material_id,nominal_density_g_cm3,source_key\n")
        for mat_id, rho, key in rows:
            f.write(f'{mat_id},{rho},"{key}"\n')

    spectra = pathlib.Path(args.data) / "spectra"
    spectra.mkdir(parents=True, exist_ok=True)
    for kvp in (70, 120):
        s = spekpy.Spek(kvp=kvp, th=12, dk=1)
        s.filter("Al", 3.5)
        mid, flu = s.get_spectrum()
        # bins are centred on half-integers; resample to integer energies
        energies = np.arange(1, kvp + 1)
        values = np.interp(energies, mid, flu, left=0.0, right=0.0)
        values[-1] = 0.0
        with open(spectra / f"tungsten_{kvp}kvp_3.5mmAl.csv", "w") as f:
            f.write("energy_keV,fluence\n")
            for e, v in zip(energies, values):
                f.write(f"{e},{v:.6e}\n")


if __name__ == "__main__":
    main()
